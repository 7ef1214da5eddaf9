"""Shader programs as evolutionary individuals.

A Population is an ordered, fixed-size list of genomes; offspring
always replace specific slots so the studio grid never shuffles.
Everything here is immutable — operations return new snapshots, which
is what makes concurrent reads safe under the single-writer model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .glsl import (
    CompileBackend,
    ValidationLimits,
    ValidationReport,
    validate_candidate,
)

OPERATOR_SEED = "seed"
OPERATOR_MUTATION = "mutation"
OPERATOR_CROSSOVER = "crossover_then_mutation"
OPERATOR_FALLBACK = "fallback"

OPERATORS = (
    OPERATOR_SEED,
    OPERATOR_MUTATION,
    OPERATOR_CROSSOVER,
    OPERATOR_FALLBACK,
)

DEFAULT_POPULATION_SIZE = 14


class GenomeError(Exception):
    pass


class UnknownGenomeError(GenomeError):
    pass


class InvalidSeedError(GenomeError):
    def __init__(self, index: int, report: ValidationReport):
        super().__init__(
            f"seed #{index} failed validation at stage "
            f"{report.stage_failed}: {'; '.join(report.diagnostics)}"
        )
        self.index = index
        self.report = report


@dataclass(frozen=True)
class ShaderGenome:
    id: str
    code: str  # sanitized, pre-wrap GLSL
    generation: int
    parent_ids: tuple[str, ...] = ()
    operator: str = OPERATOR_SEED
    selected: bool = False
    valid: bool = True

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "code": self.code,
            "generation": self.generation,
            "parent_ids": list(self.parent_ids),
            "operator": self.operator,
            "selected": self.selected,
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ShaderGenome:
        return cls(
            id=d["id"],
            code=d["code"],
            generation=d["generation"],
            parent_ids=tuple(d["parent_ids"]),
            operator=d["operator"],
            selected=d["selected"],
            valid=d["valid"],
        )


@dataclass(frozen=True)
class Population:
    genomes: tuple[ShaderGenome, ...]
    size: int
    generation: int = 0

    def ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.genomes)

    def get(self, genome_id: str) -> ShaderGenome:
        for g in self.genomes:
            if g.id == genome_id:
                return g
        raise UnknownGenomeError(f"unknown genome {genome_id!r}")

    def index_of(self, genome_id: str) -> int:
        for i, g in enumerate(self.genomes):
            if g.id == genome_id:
                return i
        raise UnknownGenomeError(f"unknown genome {genome_id!r}")

    def check_invariants(self) -> None:
        if len(self.genomes) != self.size:
            raise GenomeError(
                f"population has {len(self.genomes)} genomes, size says {self.size}"
            )
        ids = self.ids()
        if len(set(ids)) != len(ids):
            raise GenomeError("duplicate genome ids")
        for g in self.genomes:
            if not g.valid:
                raise GenomeError(f"invalid genome {g.id} admitted")
            if (g.operator == OPERATOR_SEED) != (len(g.parent_ids) == 0):
                raise GenomeError(f"genome {g.id}: seed/parent mismatch")
            if g.operator == OPERATOR_CROSSOVER and len(g.parent_ids) < 2:
                raise GenomeError(f"genome {g.id}: crossover needs >= 2 parents")


@dataclass(frozen=True)
class SelectionPartition:
    elites: tuple[str, ...]
    replaceables: tuple[str, ...]


@dataclass(frozen=True)
class TopUpRequest:
    """Asks the evolution module to fill one slot by mutating a seed."""

    slot: int
    parent_id: str


@dataclass(frozen=True)
class LineageRecord:
    child_id: str
    parent_ids: tuple[str, ...]
    operator: str
    generation: int
    prompt_template_id: str | None
    attempts_used: int = 1
    fell_back: bool = False
    validation: ValidationReport | None = None
    provider_calls: tuple[dict, ...] = ()
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "child_id": self.child_id,
            "parent_ids": list(self.parent_ids),
            "operator": self.operator,
            "generation": self.generation,
            "prompt_template_id": self.prompt_template_id,
            "attempts_used": self.attempts_used,
            "fell_back": self.fell_back,
            "validation": self.validation.to_dict() if self.validation else None,
            "provider_calls": [dict(c) for c in self.provider_calls],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> LineageRecord:
        return cls(
            child_id=d["child_id"],
            parent_ids=tuple(d["parent_ids"]),
            operator=d["operator"],
            generation=d["generation"],
            prompt_template_id=d["prompt_template_id"],
            attempts_used=d["attempts_used"],
            fell_back=d["fell_back"],
            validation=(
                ValidationReport.from_dict(d["validation"])
                if d["validation"]
                else None
            ),
            provider_calls=tuple(d["provider_calls"]),
            warnings=tuple(d.get("warnings", ())),
        )


@dataclass
class IdAllocator:
    """Engine-assigned opaque ids: monotonic counter plus birth generation.

    Never derived from code content — two genomes may share identical
    code without colliding.
    """

    counter: int = 0

    def take(self, generation: int) -> str:
        gid = f"g{generation}-{self.counter:04d}"
        self.counter += 1
        return gid


def new_population(
    seed_codes: Iterable[str],
    size: int = DEFAULT_POPULATION_SIZE,
    rng: np.random.Generator | None = None,
    alloc: IdAllocator | None = None,
    limits: ValidationLimits | None = None,
    backend: CompileBackend | None = None,
) -> tuple[Population, list[TopUpRequest], list[LineageRecord]]:
    """Build the generation-0 population from the seed bank.

    The first `size` seeds fill the list directly. When there are fewer
    seeds than slots, the shortfall is returned as top-up requests (each
    naming a randomly chosen seed parent) for the evolution module to
    fulfill via mutation; this module stays free of LLM dependencies.
    """
    seeds = list(seed_codes)
    if not seeds:
        raise GenomeError("empty seed list")
    if size < 1:
        raise GenomeError(f"population size must be positive, got {size}")
    rng = rng if rng is not None else np.random.default_rng()
    alloc = alloc or IdAllocator()
    limits = limits or ValidationLimits()

    genomes: list[ShaderGenome] = []
    lineage: list[LineageRecord] = []
    for i, raw in enumerate(seeds[:size]):
        result = validate_candidate(raw, limits, backend)
        if not result.report.ok:
            raise InvalidSeedError(i, result.report)
        gid = alloc.take(0)
        genomes.append(
            ShaderGenome(id=gid, code=result.sanitized.code, generation=0)
        )
        lineage.append(
            LineageRecord(
                child_id=gid,
                parent_ids=(),
                operator=OPERATOR_SEED,
                generation=0,
                prompt_template_id=None,
                validation=result.report,
            )
        )

    requests = [
        TopUpRequest(
            slot=len(genomes) + j,
            parent_id=genomes[int(rng.integers(len(genomes)))].id,
        )
        for j in range(size - len(genomes))
    ]
    pop = Population(genomes=tuple(genomes), size=len(genomes), generation=0)
    return pop, requests, lineage


def set_selected(pop: Population, genome_id: str, flag: bool) -> Population:
    """Flip one genome's selection flag; every other genome is untouched."""
    idx = pop.index_of(genome_id)
    genome = pop.genomes[idx]
    if genome.selected == flag:
        return pop
    genomes = list(pop.genomes)
    genomes[idx] = replace(genome, selected=flag)
    return replace(pop, genomes=tuple(genomes))


def partition(pop: Population) -> SelectionPartition:
    """Split ids into elites (selected) and replaceables, in list order."""
    elites = tuple(g.id for g in pop.genomes if g.selected)
    replaceables = tuple(g.id for g in pop.genomes if not g.selected)
    return SelectionPartition(elites=elites, replaceables=replaceables)
