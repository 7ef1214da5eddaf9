"""Durable session state and the user-facing shader export.

One structured JSON file per session, written atomically, with a schema
tag for forward compatibility. The export bundle is the plain-text file
users download: each selected genome's pre-wrap code under a header
naming the genome and its generation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioFeatureTimeline
from .evolution import EvolveConfig
from .genome import LineageRecord, Population, ShaderGenome

SCHEMA = "evoshader-session/1"

EXPORT_HEADER = "// --- shader {id} (generation {generation}) ---"


class StoreError(Exception):
    pass


class UnknownSessionError(StoreError):
    pass


class CorruptSessionError(StoreError):
    def __init__(self, path: Path, detail: str):
        super().__init__(f"corrupt session file {path}: {detail}")
        self.path = path


@dataclass
class SessionSnapshot:
    session_id: str
    population: Population
    lineage: list[LineageRecord]
    config: EvolveConfig
    alloc_counter: int = 0
    rng_state: dict | None = None
    provider_state: dict | None = None
    timelines: dict[str, AudioFeatureTimeline] = field(default_factory=dict)
    event_seq: int = 0
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)

    @property
    def generation(self) -> int:
        return self.population.generation

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "session_id": self.session_id,
            "generation": self.generation,
            "population": {
                "size": self.population.size,
                "generation": self.population.generation,
                "genomes": [g.to_dict() for g in self.population.genomes],
            },
            "lineage": [r.to_dict() for r in self.lineage],
            "config": self.config.to_dict(),
            "alloc_counter": self.alloc_counter,
            "rng_state": self.rng_state,
            "provider_state": self.provider_state,
            "timelines": {
                tid: {
                    "hop_seconds": tl.hop_seconds,
                    "features": [float(v) for v in tl.features],
                }
                for tid, tl in self.timelines.items()
            },
            "event_seq": self.event_seq,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SessionSnapshot:
        pop = d["population"]
        population = Population(
            genomes=tuple(ShaderGenome.from_dict(g) for g in pop["genomes"]),
            size=pop["size"],
            generation=pop["generation"],
        )
        population.check_invariants()
        return cls(
            session_id=d["session_id"],
            population=population,
            lineage=[LineageRecord.from_dict(r) for r in d["lineage"]],
            config=EvolveConfig.from_dict(d["config"]),
            alloc_counter=d["alloc_counter"],
            rng_state=d["rng_state"],
            provider_state=d["provider_state"],
            timelines={
                tid: AudioFeatureTimeline(
                    features=np.array(tl["features"]),
                    hop_seconds=tl["hop_seconds"],
                )
                for tid, tl in d["timelines"].items()
            },
            event_seq=d["event_seq"],
            created_at=d["created_at"],
            updated_at=d["updated_at"],
        )


def session_path(session_id: str, store_dir: str | Path) -> Path:
    return Path(store_dir) / f"{session_id}.json"


def save_session(snapshot: SessionSnapshot, store_dir: str | Path) -> Path:
    """Atomic whole-file replace, so concurrent readers never see a
    half-written session."""
    directory = Path(store_dir)
    directory.mkdir(parents=True, exist_ok=True)
    snapshot.updated_at = time.time()
    path = session_path(snapshot.session_id, directory)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(snapshot.to_dict(), indent=2))
    tmp.replace(path)
    return path


def load_session(session_id: str, store_dir: str | Path) -> SessionSnapshot:
    path = session_path(session_id, store_dir)
    if not path.exists():
        raise UnknownSessionError(f"no session {session_id!r} in {store_dir}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptSessionError(
            path, f"invalid JSON at line {exc.lineno} column {exc.colno}"
        ) from exc
    if data.get("schema") != SCHEMA:
        raise CorruptSessionError(
            path, f"schema {data.get('schema')!r}, expected {SCHEMA!r}"
        )
    try:
        return SessionSnapshot.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise CorruptSessionError(path, f"missing or bad field: {exc}") from exc


def list_sessions(store_dir: str | Path) -> list[str]:
    directory = Path(store_dir)
    if not directory.is_dir():
        return []
    return sorted(p.stem for p in directory.glob("*.json"))


def export_selected(pop: Population) -> str:
    """Bundle every selected genome's code, in slot order.

    Pure: the same population always yields byte-identical output.
    """
    selected = [g for g in pop.genomes if g.selected]
    if not selected:
        raise StoreError("nothing selected")
    sections = []
    for g in selected:
        header = EXPORT_HEADER.format(id=g.id, generation=g.generation)
        sections.append(f"{header}\n{g.code.rstrip()}\n")
    return "\n".join(sections)
