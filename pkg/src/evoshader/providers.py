"""LLM provider implementations behind the single-method interface.

ScriptedProvider and DeterministicShaderProvider exist for tests and
headless runs; FlakyProvider injects reproducible failures on top of
any inner provider. OpenAIChatProvider is the real network path, with
the credential read from the environment, never from clients. Providers
that carry state expose provider_state()/restore_provider_state() so a
session snapshot can resume a run mid-stream.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .operators import ProviderConfig, ProviderError

_MUTATION_MARK = "world-recognized artist"
_CROSSOVER_MARK = "renowned shader artist"

# Small family of known-good bodies; numeric slots get filled per call.
_BODY_TEMPLATES = [
    """\
void mainImage(out vec4 fragColor, in vec2 fragCoord) {{
    vec2 uv = fragCoord / iResolution.xy;
    float wave = sin(uv.x * {freq:.2f} + iTime * {speed:.2f});
    vec3 col = vec3({r:.3f} + 0.5 * wave, uv.y * {g:.3f}, {b:.3f} + u_audio * 0.5);
    fragColor = vec4(col, 1.0);
}}""",
    """\
float pulse(vec2 p, float t) {{
    return 0.5 + 0.5 * cos(length(p) * {freq:.2f} - t * {speed:.2f});
}}

void mainImage(out vec4 fragColor, in vec2 fragCoord) {{
    vec2 uv = (fragCoord - 0.5 * iResolution.xy) / iResolution.y;
    float v = pulse(uv, iTime) * (0.6 + 0.4 * u_audio);
    fragColor = vec4(v * {r:.3f}, v * {g:.3f}, v * {b:.3f}, 1.0);
}}""",
    """\
void mainImage(out vec4 fragColor, in vec2 fragCoord) {{
    vec2 uv = fragCoord / iResolution.xy - 0.5;
    float a = atan(uv.y, uv.x) + iTime * {speed:.2f};
    float ring = smoothstep(0.2, 0.5, abs(sin(length(uv) * {freq:.2f} - a)));
    vec3 col = mix(vec3({r:.3f}, {g:.3f}, {b:.3f}), vec3(1.0), ring * u_audio);
    fragColor = vec4(col, 1.0);
}}""",
]

_WRAPPERS = [
    "{code}",
    "```glsl\n{code}\n```",
    "```\n{code}\n```",
    "Here is an evolved variant of your shader:\n\n```glsl\n{code}\n```\n\nEnjoy!",
    "{code}\n\nHope you like this one!",
]


def _synthesize(seed: int, call_index: int) -> str:
    rng = np.random.default_rng([seed, call_index])
    body = _BODY_TEMPLATES[int(rng.integers(len(_BODY_TEMPLATES)))]
    code = body.format(
        freq=float(rng.uniform(2.0, 18.0)),
        speed=float(rng.uniform(0.3, 3.0)),
        r=float(rng.uniform(0.1, 0.9)),
        g=float(rng.uniform(0.1, 0.9)),
        b=float(rng.uniform(0.1, 0.9)),
    )
    wrapper = _WRAPPERS[int(rng.integers(len(_WRAPPERS)))]
    return wrapper.format(code=code)


@dataclass
class ScriptedProvider:
    """Plays back a fixed script: strings are responses, exceptions are
    raised. Used wherever a test needs exact control per attempt."""

    script: list
    cycle: bool = False
    calls: list[str] = field(default_factory=list)

    def complete(self, prompt: str, cfg: ProviderConfig) -> str:
        self.calls.append(prompt)
        if not self.script:
            raise ProviderError("script exhausted")
        index = (len(self.calls) - 1) % len(self.script) if self.cycle else 0
        item = self.script[index] if self.cycle else self.script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    @property
    def call_count(self) -> int:
        return len(self.calls)


class DeterministicShaderProvider:
    """Synthesizes valid shaders as a pure function of (seed, call index).

    The call index is the only state, so a resumed session replays
    identically to an uninterrupted one. Response formatting varies
    (plain, fenced, prose-wrapped) to keep the sanitizer honest.
    """

    def __init__(self, seed: int = 0, record_prompts: bool = False):
        self.seed = seed
        self.call_count = 0
        self.record_prompts = record_prompts
        self.prompts: list[str] = []

    def complete(self, prompt: str, cfg: ProviderConfig) -> str:
        if self.record_prompts:
            self.prompts.append(prompt)
        text = _synthesize(self.seed, self.call_count)
        self.call_count += 1
        return text

    def mutation_calls(self) -> int:
        return sum(1 for p in self.prompts if _MUTATION_MARK in p.split("\n")[0])

    def crossover_calls(self) -> int:
        return sum(1 for p in self.prompts if _CROSSOVER_MARK in p.split("\n")[0])

    def provider_state(self) -> dict:
        return {"kind": "mock", "seed": self.seed, "call_count": self.call_count}

    def restore_provider_state(self, state: dict) -> None:
        self.seed = state["seed"]
        self.call_count = state["call_count"]


class FlakyProvider:
    """Fails independently with a fixed probability per call."""

    def __init__(self, inner, fail_prob: float, seed: int = 0):
        self.inner = inner
        self.fail_prob = fail_prob
        self.seed = seed
        self.call_count = 0

    def complete(self, prompt: str, cfg: ProviderConfig) -> str:
        draw = float(np.random.default_rng([self.seed, self.call_count]).random())
        self.call_count += 1
        if draw < self.fail_prob:
            raise ProviderError(f"injected failure (call {self.call_count})")
        return self.inner.complete(prompt, cfg)

    def provider_state(self) -> dict:
        return {
            "kind": "flaky",
            "seed": self.seed,
            "fail_prob": self.fail_prob,
            "call_count": self.call_count,
            "inner": _state_of(self.inner),
        }

    def restore_provider_state(self, state: dict) -> None:
        self.seed = state["seed"]
        self.fail_prob = state["fail_prob"]
        self.call_count = state["call_count"]
        if state.get("inner") and hasattr(self.inner, "restore_provider_state"):
            self.inner.restore_provider_state(state["inner"])


def _state_of(provider) -> dict | None:
    if hasattr(provider, "provider_state"):
        return provider.provider_state()
    return None


class ReplayProvider:
    """Records transcripts from an inner provider, or replays them.

    A transcript is a JSON list of {prompt_sha256, response} entries in
    call order. Replay matches by order and verifies the prompt hash so
    a drifted pipeline fails loudly instead of silently diverging.
    """

    def __init__(self, transcript_path: str | Path, inner=None):
        self.path = Path(transcript_path)
        self.inner = inner
        self.cursor = 0
        if inner is None:
            if not self.path.exists():
                raise ProviderError(f"no transcript at {self.path}")
            self.entries = json.loads(self.path.read_text())
        else:
            self.entries = []

    def complete(self, prompt: str, cfg: ProviderConfig) -> str:
        digest = hashlib.sha256(prompt.encode()).hexdigest()
        if self.inner is not None:
            response = self.inner.complete(prompt, cfg)
            self.entries.append({"prompt_sha256": digest, "response": response})
            return response
        if self.cursor >= len(self.entries):
            raise ProviderError("transcript exhausted")
        entry = self.entries[self.cursor]
        self.cursor += 1
        if entry["prompt_sha256"] != digest:
            raise ProviderError(
                f"transcript mismatch at call {self.cursor}: prompt changed"
            )
        return entry["response"]

    def save(self) -> None:
        self.path.write_text(json.dumps(self.entries, indent=2))


class OpenAIChatProvider:
    """Chat-completions call over HTTP. The API key comes from the
    environment variable named in the config and is never logged."""

    def __init__(self, base_url: str = "https://api.openai.com/v1"):
        self.base_url = base_url.rstrip("/")

    def complete(self, prompt: str, cfg: ProviderConfig) -> str:
        import httpx

        key = os.environ.get(cfg.credential_env)
        if not key:
            raise ProviderError(
                f"no credential in environment variable {cfg.credential_env}"
            )
        payload = {
            "model": cfg.model,
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_response_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {key}"},
                timeout=120.0,
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(
                f"provider status {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc


def make_provider(name: str, seed: int = 0, **kwargs):
    """Factory used by the CLI and service: mock | openai | replay."""
    if name == "mock":
        return DeterministicShaderProvider(seed=seed, **kwargs)
    if name == "openai":
        return OpenAIChatProvider(**kwargs)
    if name == "replay":
        return ReplayProvider(**kwargs)
    raise ProviderError(f"unknown provider {name!r}")
