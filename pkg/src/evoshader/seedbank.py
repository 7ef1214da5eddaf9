"""Curated base shaders: initial population and retry fallback pool."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


class SeedBankError(Exception):
    pass


def load_seed_bank(path: str | Path | None = None) -> list[str]:
    """Read seed shader sources, sorted by filename for determinism.

    With no path, the bundled bank of 14 shaders is used. A directory
    path loads every *.frag and *.glsl file inside it.
    """
    if path is None:
        root = resources.files("evoshader").joinpath("seeds")
        names = sorted(
            entry.name for entry in root.iterdir() if entry.name.endswith(".frag")
        )
        return [root.joinpath(name).read_text(encoding="utf-8") for name in names]
    directory = Path(path)
    if not directory.is_dir():
        raise SeedBankError(f"seed bank directory not found: {directory}")
    files = sorted(
        p for p in directory.iterdir() if p.suffix in (".frag", ".glsl")
    )
    if not files:
        raise SeedBankError(f"no .frag or .glsl files in {directory}")
    return [p.read_text(encoding="utf-8") for p in files]
