"""Session engine: the single writer behind the API and the CLI.

Each session owns one population, its lineage log, uploaded audio
timelines, a seeded RNG, and an ordered event log. All state changes
are serialized through the session lock; readers get immutable
snapshots. At most one evolve runs per session at a time.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import evolution, store
from .audio import AudioFeatureTimeline, feature_timeline, read_wav
from .evolution import EvolveConfig, SelectionPolicy
from .genome import IdAllocator, LineageRecord, Population, ShaderGenome, set_selected
from .glsl import CompileBackend, wrap_interface
from .operators import Provider
from .store import SessionSnapshot

EVENT_POPULATION_UPDATED = "population_updated"
EVENT_EVOLVE_STARTED = "evolve_started"
EVENT_OFFSPRING_READY = "offspring_ready"
EVENT_EVOLVE_FINISHED = "evolve_finished"
EVENT_ERROR = "error"


class ServiceError(Exception):
    pass


class BusyError(ServiceError):
    """A second evolve was triggered while one is in flight."""


@dataclass(frozen=True)
class ApiEvent:
    seq: int
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload}


def _genome_view(genome: ShaderGenome, slot: int) -> dict:
    return {
        "slot": slot,
        "id": genome.id,
        "code": genome.code,
        "full_source": wrap_interface(genome.code).full_source,
        "selected": genome.selected,
        "operator": genome.operator,
        "generation": genome.generation,
    }


class Session:
    def __init__(
        self,
        session_id: str,
        population: Population,
        lineage: list[LineageRecord],
        cfg: EvolveConfig,
        provider: Provider,
        seed_bank: list[str],
        rng: np.random.Generator,
        alloc: IdAllocator,
        backend: CompileBackend | None = None,
    ):
        self.id = session_id
        self.population = population
        self.lineage = lineage
        self.cfg = cfg
        self.provider = provider
        self.seed_bank = seed_bank
        self.rng = rng
        self.alloc = alloc
        self.backend = backend
        self.timelines: dict[str, AudioFeatureTimeline] = {}
        self._timeline_counter = 0
        self.events: list[ApiEvent] = []
        self._seq = 0
        self._lock = threading.RLock()
        self._event_cv = threading.Condition(self._lock)
        self._evolving = False
        self._evolve_counter = 0

    # -- events ----------------------------------------------------

    def _emit(self, kind: str, payload: dict) -> ApiEvent:
        with self._event_cv:
            self._seq += 1
            event = ApiEvent(seq=self._seq, kind=kind, payload=payload)
            self.events.append(event)
            self._event_cv.notify_all()
            return event

    def events_since(self, after: int = 0) -> list[ApiEvent]:
        with self._lock:
            return [e for e in self.events if e.seq > after]

    def wait_for_event(self, after: int, timeout: float = 1.0) -> list[ApiEvent]:
        with self._event_cv:
            fresh = [e for e in self.events if e.seq > after]
            if fresh:
                return fresh
            self._event_cv.wait(timeout)
            return [e for e in self.events if e.seq > after]

    # -- queries ---------------------------------------------------

    def view(self) -> dict:
        with self._lock:
            pop = self.population
            return {
                "session_id": self.id,
                "generation": pop.generation,
                "size": pop.size,
                "evolving": self._evolving,
                "genomes": [
                    _genome_view(g, i) for i, g in enumerate(pop.genomes)
                ],
            }

    # -- commands --------------------------------------------------

    def set_selection(self, genome_id: str, flag: bool) -> bool:
        """Returns True when state changed; emits one event per change."""
        with self._lock:
            before = self.population
            after = set_selected(before, genome_id, flag)
            if after is before:
                return False
            self.population = after
            slot = after.index_of(genome_id)
        self._emit(
            EVENT_POPULATION_UPDATED,
            {"reason": "selection", "slot": slot, "id": genome_id, "selected": flag},
        )
        return True

    def trigger_evolve(self, background: bool = False) -> str:
        """Run one evolve step; snapshots selection at entry.

        With background=True the call returns immediately and progress
        arrives on the event stream. Raises SelectionError before any
        state changes when nothing is selected; raises BusyError when
        an evolve is already in flight.
        """
        with self._lock:
            if self._evolving:
                raise BusyError("evolve already in flight")
            if not any(g.selected for g in self.population.genomes):
                raise evolution.SelectionError(
                    "evolve requires a non-empty selection"
                )
            self._evolving = True
            self._evolve_counter += 1
            evolve_id = f"evolve-{self._evolve_counter}"

        if background:
            worker = threading.Thread(
                target=self._run_evolve, args=(evolve_id,), daemon=True
            )
            worker.start()
        else:
            self._run_evolve(evolve_id)
        return evolve_id

    def _run_evolve(self, evolve_id: str) -> None:
        pop = self.population
        self._emit(
            EVENT_EVOLVE_STARTED,
            {
                "evolve_id": evolve_id,
                "generation": pop.generation,
                "replaceable": sum(1 for g in pop.genomes if not g.selected),
            },
        )
        progress = {"done": 0}

        def on_offspring(slot: int, child: ShaderGenome, record: LineageRecord):
            progress["done"] += 1
            self._emit(
                EVENT_OFFSPRING_READY,
                {
                    "evolve_id": evolve_id,
                    "slot": slot,
                    "id": child.id,
                    "full_source": wrap_interface(child.code).full_source,
                    "fell_back": record.fell_back,
                    "attempts_used": record.attempts_used,
                    "progress": progress["done"],
                },
            )

        try:
            outcome = evolution.evolve_step(
                pop,
                self.cfg,
                self.provider,
                self.seed_bank,
                self.rng,
                self.alloc,
                self.backend,
                on_offspring,
            )
        except Exception as exc:
            self._emit(EVENT_ERROR, {"evolve_id": evolve_id, "message": str(exc)})
            with self._lock:
                self._evolving = False
            return

        with self._lock:
            # Selection edits made during the run live on the current
            # population; carry them onto the surviving slots.
            current = self.population
            merged = []
            for i, g in enumerate(outcome.population.genomes):
                live = current.genomes[i]
                if g.id == live.id and g.selected != live.selected:
                    merged.append(replace(g, selected=live.selected))
                else:
                    merged.append(g)
            self.population = Population(
                genomes=tuple(merged),
                size=outcome.population.size,
                generation=outcome.population.generation,
            )
            self.lineage.extend(outcome.lineage)
            self._evolving = False
        self._emit(
            EVENT_EVOLVE_FINISHED,
            {
                "evolve_id": evolve_id,
                "generation": self.population.generation,
                "replaced": len(outcome.lineage),
                "fallbacks": sum(1 for r in outcome.lineage if r.fell_back),
                "warnings": outcome.warnings,
            },
        )

    def autopilot(
        self, policy: SelectionPolicy, generations: int
    ) -> list[evolution.EvolveOutcome]:
        outcomes = []
        for _ in range(generations):
            with self._lock:
                if self._evolving:
                    raise BusyError("evolve already in flight")
                self._evolving = True
            try:
                outcome = evolution.autopilot_step(
                    self.population,
                    policy,
                    self.cfg,
                    self.provider,
                    self.seed_bank,
                    self.rng,
                    self.alloc,
                    self.backend,
                )
                with self._lock:
                    self.population = outcome.population
                    self.lineage.extend(outcome.lineage)
            finally:
                with self._lock:
                    self._evolving = False
            self._emit(
                EVENT_EVOLVE_FINISHED,
                {
                    "evolve_id": f"autopilot-{self.population.generation}",
                    "generation": self.population.generation,
                    "replaced": len(outcome.lineage),
                    "fallbacks": sum(1 for r in outcome.lineage if r.fell_back),
                    "warnings": outcome.warnings,
                },
            )
            outcomes.append(outcome)
        return outcomes

    def upload_audio(self, wav_payload: bytes, hop_seconds: float = 1 / 60) -> str:
        clip = read_wav(wav_payload)
        timeline = feature_timeline(clip, hop_seconds)
        with self._lock:
            self._timeline_counter += 1
            tid = f"t{self._timeline_counter}"
            self.timelines[tid] = timeline
        self._emit(
            EVENT_POPULATION_UPDATED,
            {"reason": "audio", "timeline_id": tid, "frames": len(timeline)},
        )
        return tid

    def export(self) -> str:
        with self._lock:
            return store.export_selected(self.population)

    # -- persistence -----------------------------------------------

    def snapshot(self) -> SessionSnapshot:
        with self._lock:
            provider_state = None
            if hasattr(self.provider, "provider_state"):
                provider_state = self.provider.provider_state()
            return SessionSnapshot(
                session_id=self.id,
                population=self.population,
                lineage=list(self.lineage),
                config=self.cfg,
                alloc_counter=self.alloc.counter,
                rng_state=_jsonable(self.rng.bit_generator.state),
                provider_state=provider_state,
                timelines=dict(self.timelines),
                event_seq=self._seq,
            )

    def save(self, store_dir: str | Path) -> Path:
        return store.save_session(self.snapshot(), store_dir)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def session_from_snapshot(
    snapshot: SessionSnapshot,
    provider: Provider,
    seed_bank: list[str],
    backend: CompileBackend | None = None,
) -> Session:
    rng = np.random.default_rng()
    if snapshot.rng_state is not None:
        rng.bit_generator.state = snapshot.rng_state
    if snapshot.provider_state and hasattr(provider, "restore_provider_state"):
        provider.restore_provider_state(snapshot.provider_state)
    session = Session(
        session_id=snapshot.session_id,
        population=snapshot.population,
        lineage=list(snapshot.lineage),
        cfg=snapshot.config,
        provider=provider,
        seed_bank=seed_bank,
        rng=rng,
        alloc=IdAllocator(counter=snapshot.alloc_counter),
        backend=backend,
    )
    session.timelines = dict(snapshot.timelines)
    session._timeline_counter = len(snapshot.timelines)
    session._seq = snapshot.event_seq
    return session


class SessionManager:
    """Creates, tracks, loads, and saves sessions for the API layer."""

    def __init__(
        self,
        seed_bank: list[str],
        cfg: EvolveConfig,
        provider_factory,
        store_dir: str | Path = "sessions",
        backend: CompileBackend | None = None,
    ):
        self.seed_bank = seed_bank
        self.cfg = cfg
        self.provider_factory = provider_factory
        self.store_dir = Path(store_dir)
        self.backend = backend
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, session_id: str | None = None) -> Session:
        session_id = session_id or uuid.uuid4().hex[:12]
        rng = np.random.default_rng(self.cfg.rng_seed)
        alloc = IdAllocator()
        provider = self.provider_factory()
        population, lineage = evolution.initialize(
            self.seed_bank, self.cfg, provider, rng, alloc, self.backend
        )
        session = Session(
            session_id=session_id,
            population=population,
            lineage=lineage,
            cfg=self.cfg,
            provider=provider,
            seed_bank=self.seed_bank,
            rng=rng,
            alloc=alloc,
            backend=self.backend,
        )
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self.load(session_id)
        return session

    def load(self, session_id: str) -> Session:
        snapshot = store.load_session(session_id, self.store_dir)
        session = session_from_snapshot(
            snapshot, self.provider_factory(), self.seed_bank, self.backend
        )
        with self._lock:
            self._sessions[session_id] = session
        return session

    def save(self, session_id: str) -> Path:
        return self.get(session_id).save(self.store_dir)
