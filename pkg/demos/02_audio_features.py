"""Walkthrough: from raw PCM to the per-frame u_audio scalar.

Builds a two-second clip that alternates silence and a 750 Hz tone,
then shows how the 32-band spectrum, energy aggregate, and running-max
normalization turn it into values a shader can consume.

    python demos/02_audio_features.py
"""

import numpy as np

from evoshader.audio import PcmClip, band_spectrum, energy, feature_timeline

sr = 48000
t = np.arange(sr) / sr
tone = np.sin(2 * np.pi * 750 * t)          # 750 Hz = bin 1 of the 64-pt DFT
clip = PcmClip(
    samples=np.concatenate([np.zeros(sr), tone]), sample_rate=sr
)

spec = band_spectrum(clip.samples[sr : sr + 64])
print("band magnitudes of one tone frame (first 8):")
print("  ", np.round(spec.magnitudes[:8], 2))
print(f"peak band: {int(np.argmax(spec.magnitudes))}, "
      f"aggregate energy: {energy(spec):.3f}")

timeline = feature_timeline(clip, hop_seconds=1 / 60)
feats = timeline.features
half = len(feats) // 2
print(f"\ntimeline: {len(feats)} frames at 60 fps")
print(f"  silent half  -> min {feats[:half].min():.3f}, max {feats[:half].max():.3f}")
print(f"  tone half    -> min {feats[half + 5:].min():.3f}, max {feats[half + 5:].max():.3f}")

print("\nfirst lines of the export format:")
print("\n".join(timeline.to_text().splitlines()[:5]))
