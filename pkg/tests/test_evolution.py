from __future__ import annotations

import numpy as np
import pytest

from evoshader.evolution import (
    EvolveConfig,
    EvolutionError,
    FirstSlotPolicy,
    PolicyError,
    RandomSubsetPolicy,
    SelectionError,
    autopilot_step,
    evolve_step,
    initialize,
)
from evoshader.genome import (
    IdAllocator,
    OPERATOR_CROSSOVER,
    OPERATOR_FALLBACK,
    OPERATOR_MUTATION,
    partition,
    set_selected,
)
from evoshader.operators import ProviderError
from evoshader.providers import (
    DeterministicShaderProvider,
    FlakyProvider,
    ScriptedProvider,
)


def fresh(seed_bank, seed=0, record=False, size=14):
    cfg = EvolveConfig(population_size=size, rng_seed=seed)
    rng = np.random.default_rng(seed)
    alloc = IdAllocator()
    provider = DeterministicShaderProvider(seed=seed, record_prompts=record)
    pop, lineage = initialize(seed_bank, cfg, provider, rng, alloc)
    return pop, cfg, provider, rng, alloc, lineage


def select_slots(pop, slots):
    for slot in slots:
        pop = set_selected(pop, pop.genomes[slot].id, True)
    return pop


# ------------------------------------------------------------------
# initialize
# ------------------------------------------------------------------

def test_full_bank_needs_no_provider(seed_bank):
    pop, _, provider, _, _, _ = fresh(seed_bank)
    assert pop.size == 14
    assert provider.call_count == 0


def test_short_bank_tops_up_with_mutations(seed_bank):
    cfg = EvolveConfig(rng_seed=5)
    provider = DeterministicShaderProvider(seed=5, record_prompts=True)
    pop, lineage = initialize(
        seed_bank[:10], cfg, provider, np.random.default_rng(5), IdAllocator()
    )
    assert pop.size == 14
    assert provider.call_count == 4
    assert provider.mutation_calls() == 4
    topups = [r for r in lineage if r.operator != "seed"]
    assert len(topups) == 4
    assert all(len(r.parent_ids) == 1 for r in topups)


def test_always_failing_topups_fall_back_to_seed_copies(seed_bank):
    cfg = EvolveConfig(rng_seed=2)
    provider = ScriptedProvider(script=[ProviderError("down")], cycle=True)
    pop, lineage = initialize(
        seed_bank[:10], cfg, provider, np.random.default_rng(2), IdAllocator()
    )
    assert pop.size == 14
    fallbacks = [r for r in lineage if r.fell_back]
    assert len(fallbacks) == 4
    seed_codes = {g.code for g in pop.genomes[:10]}
    for g in pop.genomes[10:]:
        assert g.operator == OPERATOR_FALLBACK
        assert g.code in seed_codes


# ------------------------------------------------------------------
# evolve_step
# ------------------------------------------------------------------

def test_single_parent_runs_mutations_only(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank, record=True)
    pop = select_slots(pop, [0])
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    assert provider.mutation_calls() == 13
    assert provider.crossover_calls() == 0
    assert outcome.hybrid_code is None
    assert len(outcome.lineage) == 13
    assert all(g.operator == OPERATOR_MUTATION for g in outcome.population.genomes[1:])


def test_multi_parent_runs_one_crossover_then_mutations(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank, record=True)
    pop = select_slots(pop, [0, 4, 9])
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    assert provider.crossover_calls() == 1
    assert provider.mutation_calls() == 11
    assert outcome.hybrid_code is not None
    assert len(outcome.lineage) == 11


def test_empty_selection_rejected(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)
    with pytest.raises(SelectionError):
        evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    assert pop.generation == 0


def test_all_selected_is_warned_noop(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)
    pop = select_slots(pop, range(14))
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    assert outcome.population == pop
    assert outcome.lineage == []
    assert "nothing to replace" in outcome.warnings
    assert provider.call_count == 0


def test_elites_byte_identical_and_slots_stable(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)
    keep = [2, 7, 11]
    pop = select_slots(pop, keep)
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    for slot in keep:
        assert outcome.population.genomes[slot].code == pop.genomes[slot].code
        assert outcome.population.genomes[slot].id == pop.genomes[slot].id
    for slot in set(range(14)) - set(keep):
        assert outcome.population.genomes[slot].id != pop.genomes[slot].id


def test_offspring_lineage_points_at_elite_snapshot(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)
    pop = select_slots(pop, [1, 3])
    elite_ids = partition(pop).elites
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    for record in outcome.lineage:
        assert record.parent_ids == elite_ids
    for g in outcome.population.genomes:
        if g.generation == 1:
            assert g.parent_ids == elite_ids
            assert g.operator in (OPERATOR_CROSSOVER, OPERATOR_FALLBACK)


def test_generation_increments_once_per_step(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)
    pop = select_slots(pop, [0])
    for expected in (1, 2, 3):
        outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
        pop = outcome.population
        assert pop.generation == expected
        pop = set_selected(pop, pop.genomes[0].id, True)


def test_always_failing_provider_still_fills_population(seed_bank):
    pop, cfg, _, rng, alloc, _ = fresh(seed_bank)
    pop = select_slots(pop, [0])
    provider = ScriptedProvider(script=[ProviderError("down")], cycle=True)
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    outcome.population.check_invariants()
    assert len(outcome.lineage) == 13
    assert all(r.fell_back for r in outcome.lineage)
    assert all(r.attempts_used == cfg.max_attempts for r in outcome.lineage)
    seed_set = {s.strip() for s in seed_bank}
    for g in outcome.population.genomes[1:]:
        assert g.operator == OPERATOR_FALLBACK
        assert g.code.strip() in seed_set


def test_provider_call_accounting_bounded(seed_bank):
    pop, cfg, _, rng, alloc, _ = fresh(seed_bank)
    pop = select_slots(pop, [0, 1])
    provider = FlakyProvider(DeterministicShaderProvider(seed=8), 0.4, seed=8)
    outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
    expected_calls = sum(r.attempts_used for r in outcome.lineage)
    # plus the crossover attempts, each bounded by max_attempts
    crossover_attempts = provider.call_count - expected_calls
    assert 1 <= crossover_attempts <= cfg.max_attempts
    assert all(1 <= r.attempts_used <= cfg.max_attempts for r in outcome.lineage)


# ------------------------------------------------------------------
# autopilot
# ------------------------------------------------------------------

def test_first_slot_policy_is_deterministic(seed_bank):
    results = []
    for _ in range(2):
        pop, cfg, provider, rng, alloc, _ = fresh(seed_bank, seed=21)
        policy = FirstSlotPolicy()
        for _ in range(10):
            pop = autopilot_step(
                pop, policy, cfg, provider, seed_bank, rng, alloc
            ).population
        results.append([g.code for g in pop.genomes])
    assert results[0] == results[1]


def test_policy_unknown_ids_rejected(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)

    class BadPolicy:
        def select(self, pop, rng):
            return ["ghost"]

    with pytest.raises(PolicyError):
        autopilot_step(pop, BadPolicy(), cfg, provider, seed_bank, rng, alloc)


def test_policy_empty_selection_rejected(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank)

    class EmptyPolicy:
        def select(self, pop, rng):
            return []

    with pytest.raises(PolicyError):
        autopilot_step(pop, EmptyPolicy(), cfg, provider, seed_bank, rng, alloc)


def test_random_policy_long_run_invariants(seed_bank):
    pop, cfg, provider, rng, alloc, _ = fresh(seed_bank, seed=99)
    policy = RandomSubsetPolicy()
    previous = pop
    for step in range(100):
        outcome = autopilot_step(
            previous, policy, cfg, provider, seed_bank, rng, alloc
        )
        current = outcome.population
        current.check_invariants()
        assert current.generation == step + 1
        elite_ids = {r.parent_ids for r in outcome.lineage}
        assert len(elite_ids) <= 1  # every record shares the snapshot parents
        for gid in next(iter(elite_ids), ()):
            idx = previous.index_of(gid)
            assert current.genomes[idx].code == previous.genomes[idx].code
        previous = current


def test_config_validation():
    with pytest.raises(EvolutionError):
        EvolveConfig(population_size=1)
    with pytest.raises(EvolutionError):
        EvolveConfig(max_attempts=0)
