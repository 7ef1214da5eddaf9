"""Headless command line: everything the studio can do minus rendering.

    evoshader init --session demo --provider mock
    evoshader evolve demo --select 0,2,5
    evoshader autopilot demo --policy random-k --generations 10
    evoshader validate shader.frag
    evoshader features track.wav --hop 0.0167
    evoshader export demo --out picks.txt
    evoshader serve --port 8000
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evolution import POLICIES, EvolveConfig, SelectionError
from .glsl import ValidationLimits, validate_candidate
from .operators import ProviderConfig
from .providers import make_provider
from .seedbank import load_seed_bank
from .service import SessionManager
from .audio import feature_timeline, read_wav
from .store import StoreError


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _build_cfg(args, file_cfg: dict) -> EvolveConfig:
    provider_cfg = ProviderConfig(
        temperature=file_cfg.get("temperature", 0.9),
        credential_env=file_cfg.get("credential_env", "API_KEY"),
    )
    return EvolveConfig(
        population_size=file_cfg.get("population_size", args.size),
        max_attempts=file_cfg.get("max_attempts", args.max_attempts),
        provider=provider_cfg,
        limits=ValidationLimits(
            max_code_length=file_cfg.get("max_code_length", 8000)
        ),
        rng_seed=file_cfg.get("rng_seed", args.seed),
    )


def _manager(args, file_cfg: dict) -> SessionManager:
    seeds_path = file_cfg.get("seed_bank", args.seeds)
    seed_bank = load_seed_bank(seeds_path)
    cfg = _build_cfg(args, file_cfg)
    provider_name = getattr(args, "provider", "mock")

    def provider_factory():
        return make_provider(provider_name, seed=cfg.rng_seed)

    return SessionManager(
        seed_bank=seed_bank,
        cfg=cfg,
        provider_factory=provider_factory,
        store_dir=args.store,
    )


def _parse_slots(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise SystemExit(f"bad --select value {text!r}: expected e.g. 0,2,5")


def cmd_init(args) -> int:
    manager = _manager(args, _load_config(args.config))
    session = manager.create(args.session)
    manager.save(session.id)
    print(f"session {session.id}: {session.population.size} shaders, "
          f"generation {session.population.generation}")
    return 0


def cmd_evolve(args) -> int:
    manager = _manager(args, _load_config(args.config))
    session = manager.get(args.session)
    slots = _parse_slots(args.select)
    pop = session.population
    for slot in slots:
        if not 0 <= slot < pop.size:
            print(f"slot {slot} out of range 0..{pop.size - 1}", file=sys.stderr)
            return 2
    wanted = {pop.genomes[slot].id for slot in slots}
    for g in pop.genomes:
        session.set_selection(g.id, g.id in wanted)
    try:
        session.trigger_evolve()
    except SelectionError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    manager.save(session.id)
    replaced = len(session.population.genomes) - len(wanted)
    print(f"generation {session.population.generation}: "
          f"kept {len(wanted)}, replaced {replaced}")
    return 0


def cmd_autopilot(args) -> int:
    manager = _manager(args, _load_config(args.config))
    try:
        session = manager.get(args.session)
    except StoreError:
        session = manager.create(args.session)
    if args.policy not in POLICIES:
        print(f"unknown policy {args.policy!r}; have {sorted(POLICIES)}",
              file=sys.stderr)
        return 2
    policy = POLICIES[args.policy]()
    outcomes = session.autopilot(policy, args.generations)
    manager.save(session.id)
    fallbacks = sum(sum(1 for r in o.lineage if r.fell_back) for o in outcomes)
    print(f"ran {len(outcomes)} generations "
          f"(now at {session.population.generation}); "
          f"{fallbacks} fallbacks")
    return 0


def cmd_validate(args) -> int:
    raw = Path(args.file).read_text()
    result = validate_candidate(raw, ValidationLimits())
    report = result.report
    if report.ok:
        print(f"ok ({report.code_length} chars wrapped)")
        return 0
    print(f"failed at stage {report.stage_failed}: "
          f"{'; '.join(report.diagnostics)}")
    return 1


def cmd_features(args) -> int:
    clip = read_wav(args.wav)
    timeline = feature_timeline(clip, args.hop)
    text = timeline.to_text()
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(timeline)} features -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_export(args) -> int:
    manager = _manager(args, _load_config(args.config))
    session = manager.get(args.session)
    try:
        bundle = session.export()
    except StoreError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(bundle)
        print(f"export -> {args.out}")
    else:
        sys.stdout.write(bundle)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    manager = _manager(args, _load_config(args.config))
    app = create_app(manager, static_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoshader",
        description="breed audio-reactive GLSL shaders from the terminal",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--store", default="sessions", help="session directory")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seeds", default=None, help="seed bank directory")
        p.add_argument("--provider", default="mock",
                       choices=["mock", "openai"], help="LLM provider")
        p.add_argument("--seed", type=int, default=0, help="RNG seed")
        p.add_argument("--size", type=int, default=14, help="population size")
        p.add_argument("--max-attempts", type=int, default=5, dest="max_attempts")

    p = sub.add_parser("init", help="create and save a new session")
    common(p)
    p.add_argument("--session", default=None, help="session id")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("evolve", help="run one evolve step on a session")
    common(p)
    p.add_argument("session")
    p.add_argument("--select", required=True,
                   help="comma-separated slot indices to keep")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("autopilot", help="run scripted generations")
    common(p)
    p.add_argument("session")
    p.add_argument("--policy", default="random-k")
    p.add_argument("--generations", type=int, default=10)
    p.set_defaults(func=cmd_autopilot)

    p = sub.add_parser("validate", help="run the shader pipeline on a file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("features", help="extract an audio feature timeline")
    p.add_argument("wav")
    p.add_argument("--hop", type=float, default=1 / 60)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("export", help="write the selected-shader bundle")
    common(p)
    p.add_argument("session")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="run the studio API server")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--frontend", default=None,
                   help="directory with the built studio (serves it at /)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return 2
    except StoreError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
