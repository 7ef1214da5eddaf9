from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

TINY_SHADER = """\
void mainImage(out vec4 fragColor, in vec2 fragCoord) {
    vec2 uv = fragCoord / iResolution.xy;
    fragColor = vec4(uv, 0.5 + 0.5 * sin(iTime) * u_audio, 1.0);
}
"""


def make_wav(
    samples: np.ndarray,
    sample_rate: int = 48000,
    channels: int = 1,
    fmt: str = "pcm16",
) -> bytes:
    """Build a RIFF/WAVE payload by hand, independent of the parser."""
    frames = np.asarray(samples)
    if channels > 1 and frames.ndim == 1:
        frames = np.tile(frames[:, None], (1, channels))
    flat = frames.reshape(-1)
    if fmt == "pcm16":
        body = (np.clip(flat, -1, 1) * 32767).astype("<i2").tobytes()
        audio_format, bits = 1, 16
    elif fmt == "float32":
        body = flat.astype("<f4").tobytes()
        audio_format, bits = 3, 32
    else:
        raise ValueError(fmt)
    block_align = channels * bits // 8
    fmt_chunk = struct.pack(
        "<HHIIHH",
        audio_format,
        channels,
        sample_rate,
        sample_rate * block_align,
        block_align,
        bits,
    )
    chunks = b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    chunks += b"data" + struct.pack("<I", len(body)) + body
    if len(body) % 2:
        chunks += b"\x00"
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


@pytest.fixture
def tiny_shader() -> str:
    return TINY_SHADER


@pytest.fixture
def seed_bank() -> list[str]:
    from evoshader.seedbank import load_seed_bank

    return load_seed_bank()
