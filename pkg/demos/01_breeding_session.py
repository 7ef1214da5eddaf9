"""Walkthrough: breed a shader population headlessly with the mock provider.

Mirrors what the studio does when you click around: seed a population,
pick favorites, evolve, inspect lineage, export your picks.

    python demos/01_breeding_session.py
"""

import numpy as np

from evoshader.evolution import EvolveConfig, evolve_step, initialize
from evoshader.genome import IdAllocator, partition, set_selected
from evoshader.providers import DeterministicShaderProvider
from evoshader.seedbank import load_seed_bank
from evoshader.store import export_selected

seed_bank = load_seed_bank()
print(f"seed bank: {len(seed_bank)} curated shaders")

cfg = EvolveConfig(rng_seed=2024)
rng = np.random.default_rng(cfg.rng_seed)
alloc = IdAllocator()
provider = DeterministicShaderProvider(seed=cfg.rng_seed)

pop, lineage = initialize(seed_bank, cfg, provider, rng, alloc)
print(f"generation {pop.generation}: {pop.size} shaders, "
      f"{provider.call_count} provider calls so far")

# Act as the curator: keep slots 0 and 5, replace the rest.
for slot in (0, 5):
    pop = set_selected(pop, pop.genomes[slot].id, True)
split = partition(pop)
print(f"selected {len(split.elites)} elites, "
      f"{len(split.replaceables)} slots will be replaced")

outcome = evolve_step(pop, cfg, provider, seed_bank, rng, alloc)
pop = outcome.population
print(f"generation {pop.generation}: hybrid synthesized "
      f"({len(outcome.hybrid_code)} chars), "
      f"{len(outcome.lineage)} offspring, "
      f"{sum(r.fell_back for r in outcome.lineage)} fallbacks")

for record in outcome.lineage[:3]:
    print(f"  {record.child_id} <- {list(record.parent_ids)} "
          f"via {record.operator} in {record.attempts_used} attempt(s)")

# Elites came through untouched; everything else is new.
assert pop.genomes[0].code == outcome.population.genomes[0].code

bundle = export_selected(pop)
print("\nexport preview:")
print("\n".join(bundle.splitlines()[:4]))
