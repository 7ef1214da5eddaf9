"""Per-frame audio feature extraction for the u_audio uniform.

Mirrors the browser analyser convention server-side: 64-sample frames,
Hann window, 64-point DFT, 32 band magnitudes. Band energies are
averaged and normalized against a slowly decaying running maximum so
the feature always lands in [0, 1], with silence mapping to 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

FRAME_SIZE = 64
BAND_COUNT = 32

# periodic Hann, matching analyser conventions
_WINDOW = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(FRAME_SIZE) / FRAME_SIZE)

TIMELINE_HEADER = "# evoshader-timeline v1"


class AudioError(Exception):
    pass


class FrameLengthError(AudioError):
    pass


class EmptyClipError(AudioError):
    pass


class WavFormatError(AudioError):
    """Malformed WAV payload; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class PcmClip:
    samples: np.ndarray  # mono float in [-1, 1]
    sample_rate: int
    channels: int = 1

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class BandSpectrum:
    magnitudes: np.ndarray  # 32 non-negative reals
    frame_index: int = 0


@dataclass(frozen=True)
class RunningMax:
    """Normalization state: slow-decay running maximum of frame energy."""

    value: float = 0.0
    decay: float = 0.999
    eps: float = 1e-12


@dataclass(frozen=True)
class AudioFeatureTimeline:
    features: np.ndarray  # each in [0, 1]
    hop_seconds: float

    def __len__(self) -> int:
        return len(self.features)

    def to_text(self) -> str:
        lines = [TIMELINE_HEADER, f"# hop_seconds={self.hop_seconds!r}"]
        lines.extend(repr(float(v)) for v in self.features)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> AudioFeatureTimeline:
        lines = text.splitlines()
        if not lines or lines[0] != TIMELINE_HEADER:
            raise AudioError("not a timeline file (missing header)")
        if len(lines) < 2 or not lines[1].startswith("# hop_seconds="):
            raise AudioError("timeline file missing hop_seconds")
        hop = float(lines[1].split("=", 1)[1])
        feats = np.array([float(v) for v in lines[2:] if v.strip()])
        return cls(features=feats, hop_seconds=hop)


def band_spectrum(frame: np.ndarray, frame_index: int = 0) -> BandSpectrum:
    """Magnitudes of DFT bins 0..31 of one Hann-windowed 64-sample frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (FRAME_SIZE,):
        raise FrameLengthError(
            f"expected {FRAME_SIZE} samples, got {frame.shape}"
        )
    spectrum = np.fft.rfft(frame * _WINDOW)
    return BandSpectrum(
        magnitudes=np.abs(spectrum[:BAND_COUNT]), frame_index=frame_index
    )


def energy(spectrum: BandSpectrum) -> float:
    """Aggregate energy: mean of the 32 band magnitudes."""
    return float(np.mean(spectrum.magnitudes))


def normalize_feature(e: float, calib: RunningMax) -> tuple[float, RunningMax]:
    """Map an energy value to [0, 1] against the decaying running max.

    The maximum decays first, then absorbs the incoming energy, so the
    loudest frame so far always maps to exactly 1.0 and silence to 0.
    """
    if e < 0:
        raise AudioError(f"energy must be non-negative, got {e}")
    peak = max(calib.value * calib.decay, e)
    a = min(max(e / max(peak, calib.eps), 0.0), 1.0)
    return a, replace(calib, value=peak)


def feature_timeline(
    clip: PcmClip, hop_seconds: float, calib: RunningMax | None = None
) -> AudioFeatureTimeline:
    """Frame the clip at the hop interval and run the full feature chain.

    Frame i covers 64 samples starting at round(i * hop * rate); the
    tail is zero-padded. Timeline length is ceil(duration / hop).
    """
    if len(clip.samples) == 0:
        raise EmptyClipError("clip has no samples")
    if hop_seconds <= 0:
        raise AudioError(f"hop_seconds must be positive, got {hop_seconds}")
    state = calib or RunningMax()
    n_frames = int(np.ceil(clip.duration / hop_seconds))
    n_frames = max(n_frames, 1)
    feats = np.empty(n_frames)
    samples = clip.samples
    for i in range(n_frames):
        start = round(i * hop_seconds * clip.sample_rate)
        frame = samples[start : start + FRAME_SIZE]
        if len(frame) < FRAME_SIZE:
            frame = np.pad(frame, (0, FRAME_SIZE - len(frame)))
        e = energy(band_spectrum(frame, frame_index=i))
        feats[i], state = normalize_feature(e, state)
    return AudioFeatureTimeline(features=feats, hop_seconds=hop_seconds)


# ------------------------------------------------------------------
# WAV ingest (RIFF, PCM16 LE and IEEE float32)
# ------------------------------------------------------------------

def read_wav(source: bytes | str | Path) -> PcmClip:
    """Parse a RIFF/WAVE payload into a mono PcmClip.

    Supports PCM 16-bit LE (format 1) and IEEE float32 (format 3);
    multi-channel audio is averaged down to mono. Errors carry the
    byte offset and the chunk that was being parsed.
    """
    data = Path(source).read_bytes() if isinstance(source, (str, Path)) else source
    if len(data) < 12:
        raise WavFormatError("truncated RIFF header", len(data))
    if data[0:4] != b"RIFF":
        raise WavFormatError("missing RIFF tag", 0)
    if data[8:12] != b"WAVE":
        raise WavFormatError("missing WAVE tag", 8)

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise WavFormatError(
                f"chunk {chunk_id!r} truncated ({len(body)} of {chunk_size} bytes)",
                pos,
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise WavFormatError("fmt chunk too short", pos)
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = (body, pos + 8)
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("missing 'fmt ' chunk", pos)
    if payload is None:
        raise WavFormatError("missing 'data' chunk", pos)

    audio_format, channels, sample_rate, _, _, bits = fmt
    body, body_offset = payload
    if channels < 1:
        raise WavFormatError("zero channels", body_offset)

    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(body[: len(body) - len(body) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(body[: len(body) - len(body) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise WavFormatError(
            f"unsupported format {audio_format} with {bits}-bit samples "
            "(need PCM16 or float32)",
            body_offset,
        )

    frames = len(samples) // channels
    samples = samples[: frames * channels].reshape(frames, channels).mean(axis=1)
    samples = np.clip(samples, -1.0, 1.0)
    return PcmClip(samples=samples, sample_rate=sample_rate, channels=channels)
