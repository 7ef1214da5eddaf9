"""Semantic mutation and crossover as prompt-template LLM invocations.

Templates live as plain text files next to this module; the builders
only ever append delimited code blocks to them. generate_valid_offspring
is the bounded retry loop: every response runs through the full GLSL
pipeline, and after the attempt budget is exhausted the caller-supplied
base shader is used instead.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Protocol

from .glsl import CompileBackend, ValidationLimits, ValidationReport, validate_candidate

MUTATION_TEMPLATE_ID = "mutation"
CROSSOVER_TEMPLATE_ID = "crossover"

DEFAULT_MAX_ATTEMPTS = 5


class OperatorError(Exception):
    pass


class ProviderError(OperatorError):
    """Transport failure, provider error status, or empty response."""


class CrossoverArityError(OperatorError):
    pass


class PromptBudgetError(OperatorError):
    pass


@dataclass
class ProviderConfig:
    model: str = "gpt-4"
    temperature: float = 0.9  # moderately high, for aesthetic diversity
    max_response_tokens: int = 2048
    prompt_char_budget: int = 24000  # ~4 chars per token
    credential_env: str = "API_KEY"

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise OperatorError(
                f"temperature must be in [0, 2], got {self.temperature}"
            )

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "max_response_tokens": self.max_response_tokens,
            "prompt_char_budget": self.prompt_char_budget,
            "credential_env": self.credential_env,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ProviderConfig:
        return cls(**d)


class Provider(Protocol):
    def complete(self, prompt: str, cfg: ProviderConfig) -> str: ...


@dataclass
class OffspringResult:
    genome_code: str  # sanitized, pre-wrap
    attempts_used: int
    fell_back: bool
    reports: list[ValidationReport] = field(default_factory=list)
    call_stats: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def load_template(template_id: str) -> str:
    if template_id not in (MUTATION_TEMPLATE_ID, CROSSOVER_TEMPLATE_ID):
        raise OperatorError(f"unknown template {template_id!r}")
    path = resources.files("evoshader").joinpath(f"templates/{template_id}.txt")
    return path.read_text(encoding="utf-8").strip()


def build_mutation_prompt(parent_code: str) -> str:
    """Mutation template plus the parent in a fenced code block."""
    if not parent_code or not parent_code.strip():
        raise OperatorError("parent code is empty")
    template = load_template(MUTATION_TEMPLATE_ID)
    return f"{template}\n\n```glsl\n{parent_code.rstrip()}\n```\n"


def build_crossover_prompt(
    parent_codes: list[str], max_chars: int | None = None
) -> str:
    """Crossover template plus each parent in its own numbered block.

    Parents appear in selection order. Raises PromptBudgetError when the
    rendered prompt would exceed max_chars, signalling the caller to
    truncate the parent set (see fit_crossover_parents).
    """
    if len(parent_codes) < 2:
        raise CrossoverArityError("crossover requires >= 2 parents")
    template = load_template(CROSSOVER_TEMPLATE_ID)
    blocks = [
        f"Shader {i + 1}:\n```glsl\n{code.rstrip()}\n```"
        for i, code in enumerate(parent_codes)
    ]
    prompt = template + "\n\n" + "\n\n".join(blocks) + "\n"
    if max_chars is not None and len(prompt) > max_chars:
        raise PromptBudgetError(
            f"crossover prompt is {len(prompt)} chars, budget {max_chars}"
        )
    return prompt


def fit_crossover_parents(
    parent_codes: list[str], max_chars: int
) -> tuple[list[str], bool]:
    """Trim the parent list to the earliest-selected ones that fit.

    Returns (kept_parents, truncated). Keeps at least two parents even
    if they bust the budget — a too-long prompt beats a broken operator.
    """
    kept = list(parent_codes)
    truncated = False
    while len(kept) > 2:
        try:
            build_crossover_prompt(kept, max_chars)
            return kept, truncated
        except PromptBudgetError:
            kept.pop()
            truncated = True
    return kept, truncated


def request_variant(
    provider: Provider, prompt: str, cfg: ProviderConfig
) -> tuple[str, dict]:
    """One completion call. Returns the raw text plus call stats for
    the lineage log. Failures and empty responses raise ProviderError."""
    started = time.perf_counter()
    try:
        text = provider.complete(prompt, cfg)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"provider failure: {exc}") from exc
    latency = time.perf_counter() - started
    if not text or not text.strip():
        raise ProviderError("empty response")
    stats = {
        "latency_s": round(latency, 6),
        "prompt_chars": len(prompt),
        "response_chars": len(text),
        "est_tokens": (len(prompt) + len(text)) // 4,
    }
    return text, stats


def generate_valid_offspring(
    provider: Provider,
    prompt: str,
    cfg: ProviderConfig,
    limits: ValidationLimits,
    fallback_code: str,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    backend: CompileBackend | None = None,
) -> OffspringResult:
    """Retry loop around request -> sanitize -> wrap -> validate.

    The first fully valid candidate wins. After max_attempts failures
    the fallback (a known-good base shader) is returned with
    fell_back=True; no failure escapes this function.
    """
    reports: list[ValidationReport] = []
    stats: list[dict] = []
    warnings: list[str] = []
    for attempt in range(1, max_attempts + 1):
        try:
            raw, call_stat = request_variant(provider, prompt, cfg)
        except ProviderError as exc:
            reports.append(
                ValidationReport(
                    ok=False, stage_failed="sanitize", diagnostics=[str(exc)]
                )
            )
            continue
        stats.append(call_stat)
        result = validate_candidate(raw, limits, backend)
        reports.append(result.report)
        if result.report.ok:
            return OffspringResult(
                genome_code=result.sanitized.code,
                attempts_used=attempt,
                fell_back=False,
                reports=reports,
                call_stats=stats,
                warnings=warnings,
            )
    warnings.append(f"all {max_attempts} attempts failed; fell back to base shader")
    return OffspringResult(
        genome_code=fallback_code,
        attempts_used=max_attempts,
        fell_back=True,
        reports=reports,
        call_stats=stats,
        warnings=warnings,
    )
