"""One generation of the interactive loop.

Selection is snapshotted, then every unselected slot is replaced by a
freshly generated offspring while selected genomes persist unchanged.
A single selected parent feeds mutation directly; two or more parents
are first blended into one hybrid, which then serves as the base for
the per-slot mutations. The hybrid itself never enters the population.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .genome import (
    IdAllocator,
    LineageRecord,
    OPERATOR_CROSSOVER,
    OPERATOR_FALLBACK,
    OPERATOR_MUTATION,
    Population,
    ShaderGenome,
    new_population,
    partition,
    set_selected,
)
from .glsl import CompileBackend, ValidationLimits
from .operators import (
    CROSSOVER_TEMPLATE_ID,
    DEFAULT_MAX_ATTEMPTS,
    MUTATION_TEMPLATE_ID,
    Provider,
    ProviderConfig,
    build_crossover_prompt,
    build_mutation_prompt,
    fit_crossover_parents,
    generate_valid_offspring,
)

DEFAULT_POPULATION_SIZE = 14


class EvolutionError(Exception):
    pass


class SelectionError(EvolutionError):
    pass


class PolicyError(EvolutionError):
    pass


@dataclass
class EvolveConfig:
    population_size: int = DEFAULT_POPULATION_SIZE
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    limits: ValidationLimits = field(default_factory=ValidationLimits)
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise EvolutionError("population size must be >= 2")
        if self.max_attempts < 1:
            raise EvolutionError("max_attempts must be >= 1")

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "max_attempts": self.max_attempts,
            "provider": self.provider.to_dict(),
            "limits": {
                "max_code_length": self.limits.max_code_length,
                "required_entry": self.limits.required_entry,
            },
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvolveConfig:
        return cls(
            population_size=d["population_size"],
            max_attempts=d["max_attempts"],
            provider=ProviderConfig.from_dict(d["provider"]),
            limits=ValidationLimits(**d["limits"]),
            rng_seed=d["rng_seed"],
        )


@dataclass
class EvolveOutcome:
    population: Population
    lineage: list[LineageRecord]
    hybrid_code: str | None = None
    warnings: list[str] = field(default_factory=list)


class SelectionPolicy(Protocol):
    """Programmatic stand-in for the human curator."""

    def select(
        self, pop: Population, rng: np.random.Generator
    ) -> Sequence[str]: ...


class FirstSlotPolicy:
    """Always keeps slot 0."""

    def select(self, pop: Population, rng: np.random.Generator) -> Sequence[str]:
        return [pop.genomes[0].id]


class RandomSubsetPolicy:
    """Keeps a random non-empty proper subset, so every step evolves."""

    def select(self, pop: Population, rng: np.random.Generator) -> Sequence[str]:
        n = len(pop.genomes)
        k = int(rng.integers(1, n))  # 1 .. n-1
        picks = rng.choice(n, size=k, replace=False)
        return [pop.genomes[int(i)].id for i in sorted(picks)]


POLICIES: dict[str, Callable[[], SelectionPolicy]] = {
    "first": FirstSlotPolicy,
    "random-k": RandomSubsetPolicy,
}


def _fallback_seed(
    seed_bank: Sequence[str], rng: np.random.Generator
) -> str:
    return seed_bank[int(rng.integers(len(seed_bank)))]


def initialize(
    seed_bank: Sequence[str],
    cfg: EvolveConfig,
    provider: Provider | None,
    rng: np.random.Generator,
    alloc: IdAllocator | None = None,
    backend: CompileBackend | None = None,
) -> tuple[Population, list[LineageRecord]]:
    """Build generation 0, topping up missing slots via mutation.

    A top-up whose attempts all fail keeps a copy of its seed parent,
    so initialization never raises past seed validation.
    """
    alloc = alloc or IdAllocator()
    pop, requests, lineage = new_population(
        seed_bank, cfg.population_size, rng, alloc, cfg.limits, backend
    )
    genomes = list(pop.genomes)
    for request in requests:
        parent = next(g for g in genomes if g.id == request.parent_id)
        prompt = build_mutation_prompt(parent.code)
        result = generate_valid_offspring(
            provider,
            prompt,
            cfg.provider,
            cfg.limits,
            fallback_code=parent.code,
            max_attempts=cfg.max_attempts,
            backend=backend,
        )
        gid = alloc.take(0)
        genomes.append(
            ShaderGenome(
                id=gid,
                code=result.genome_code,
                generation=0,
                parent_ids=(parent.id,),
                operator=OPERATOR_FALLBACK if result.fell_back else OPERATOR_MUTATION,
            )
        )
        lineage.append(
            LineageRecord(
                child_id=gid,
                parent_ids=(parent.id,),
                operator=OPERATOR_FALLBACK if result.fell_back else OPERATOR_MUTATION,
                generation=0,
                prompt_template_id=MUTATION_TEMPLATE_ID,
                attempts_used=result.attempts_used,
                fell_back=result.fell_back,
                validation=result.reports[-1] if result.reports else None,
                provider_calls=tuple(result.call_stats),
                warnings=tuple(result.warnings),
            )
        )
    final = Population(
        genomes=tuple(genomes), size=len(genomes), generation=0
    )
    final.check_invariants()
    return final, lineage


def evolve_step(
    pop: Population,
    cfg: EvolveConfig,
    provider: Provider,
    seed_bank: Sequence[str],
    rng: np.random.Generator,
    alloc: IdAllocator,
    backend: CompileBackend | None = None,
    on_offspring: Callable[[int, ShaderGenome, LineageRecord], None] | None = None,
) -> EvolveOutcome:
    """Run one generation update from the current selection snapshot.

    Raises SelectionError when nothing is selected (mirrors the disabled
    Evolve button). An all-selected population is a warned no-op: there
    is nothing to replace, so the population and generation are kept.
    """
    snapshot = partition(pop)
    if not snapshot.elites:
        raise SelectionError("evolve requires a non-empty selection")
    if not snapshot.replaceables:
        return EvolveOutcome(
            population=pop, lineage=[], warnings=["nothing to replace"]
        )

    elites = [pop.get(gid) for gid in snapshot.elites]
    warnings: list[str] = []
    hybrid_code: str | None = None
    next_generation = pop.generation + 1

    if len(elites) == 1:
        base_code = elites[0].code
        operator = OPERATOR_MUTATION
        template_used = MUTATION_TEMPLATE_ID
    else:
        parent_codes, truncated = fit_crossover_parents(
            [g.code for g in elites], cfg.provider.prompt_char_budget
        )
        if truncated:
            warnings.append(
                f"crossover prompt over budget; used first "
                f"{len(parent_codes)} of {len(elites)} parents"
            )
        crossover_prompt = build_crossover_prompt(parent_codes)
        hybrid = generate_valid_offspring(
            provider,
            crossover_prompt,
            cfg.provider,
            cfg.limits,
            fallback_code=_fallback_seed(seed_bank, rng),
            max_attempts=cfg.max_attempts,
            backend=backend,
        )
        hybrid_code = hybrid.genome_code
        if hybrid.fell_back:
            warnings.append("crossover fell back to a base shader")
        base_code = hybrid_code
        operator = OPERATOR_CROSSOVER
        template_used = CROSSOVER_TEMPLATE_ID

    parent_ids = tuple(snapshot.elites)
    mutation_prompt = build_mutation_prompt(base_code)
    replacements: dict[str, ShaderGenome] = {}
    lineage: list[LineageRecord] = []
    for replace_id in snapshot.replaceables:
        slot = pop.index_of(replace_id)
        result = generate_valid_offspring(
            provider,
            mutation_prompt,
            cfg.provider,
            cfg.limits,
            fallback_code=_fallback_seed(seed_bank, rng),
            max_attempts=cfg.max_attempts,
            backend=backend,
        )
        gid = alloc.take(next_generation)
        child = ShaderGenome(
            id=gid,
            code=result.genome_code,
            generation=next_generation,
            parent_ids=parent_ids,
            operator=OPERATOR_FALLBACK if result.fell_back else operator,
        )
        record = LineageRecord(
            child_id=gid,
            parent_ids=parent_ids,
            operator=child.operator,
            generation=next_generation,
            prompt_template_id=template_used,
            attempts_used=result.attempts_used,
            fell_back=result.fell_back,
            validation=result.reports[-1] if result.reports else None,
            provider_calls=tuple(result.call_stats),
            warnings=tuple(result.warnings),
        )
        replacements[replace_id] = child
        lineage.append(record)
        if on_offspring is not None:
            on_offspring(slot, child, record)

    genomes = tuple(
        replacements.get(g.id, g) for g in pop.genomes
    )
    next_pop = Population(
        genomes=genomes, size=pop.size, generation=next_generation
    )
    next_pop.check_invariants()
    return EvolveOutcome(
        population=next_pop,
        lineage=lineage,
        hybrid_code=hybrid_code,
        warnings=warnings,
    )


def autopilot_step(
    pop: Population,
    policy: SelectionPolicy,
    cfg: EvolveConfig,
    provider: Provider,
    seed_bank: Sequence[str],
    rng: np.random.Generator,
    alloc: IdAllocator,
    backend: CompileBackend | None = None,
    on_offspring: Callable[[int, ShaderGenome, LineageRecord], None] | None = None,
) -> EvolveOutcome:
    """Apply a selection policy, then run one evolve step."""
    chosen = list(policy.select(pop, rng))
    if not chosen:
        raise PolicyError("policy returned an empty selection")
    known = set(pop.ids())
    unknown = [gid for gid in chosen if gid not in known]
    if unknown:
        raise PolicyError(f"policy returned unknown ids: {unknown}")
    chosen_set = set(chosen)
    for g in pop.genomes:
        pop = set_selected(pop, g.id, g.id in chosen_set)
    return evolve_step(
        pop, cfg, provider, seed_bank, rng, alloc, backend, on_offspring
    )
