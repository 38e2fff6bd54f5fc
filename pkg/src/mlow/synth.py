"""Deterministic synthetic multichannel series for tests and demos.

Each channel sums bin-aligned cosines (random per-channel amplitude and
phase), an optional linear trend and Gaussian noise.  The generator
parameters, including the realized per-channel draws, are returned as a
metadata dict so tests can reason about the known structure.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

__all__ = ["SYNTH_PARTS", "generate_series"]

SYNTH_PARTS = ("tones", "trend", "noise")


def generate_series(
    length: int,
    channels: int = 1,
    seed: int = 0,
    parts=SYNTH_PARTS,
    periods=(24, 168),
    amplitudes=None,
    trend_slope: float = 1e-3,
    noise_sigma: float = 0.3,
) -> tuple[np.ndarray, dict]:
    """Return (values of shape (length, channels), metadata)."""
    if length < 1:
        raise InvalidInputError(f"length must be >= 1, got {length}")
    if channels < 1:
        raise InvalidInputError(f"channels must be >= 1, got {channels}")
    parts = tuple(parts)
    unknown = set(parts) - set(SYNTH_PARTS)
    if unknown:
        raise InvalidInputError(f"unknown synth parts {sorted(unknown)}; expected subset of {SYNTH_PARTS}")
    periods = tuple(float(p) for p in periods)
    if any(p <= 0 for p in periods):
        raise InvalidInputError(f"periods must be positive, got {periods}")
    if amplitudes is None:
        amplitudes = tuple(1.0 for _ in periods)
    amplitudes = tuple(float(a) for a in amplitudes)
    if len(amplitudes) != len(periods):
        raise InvalidInputError(
            f"got {len(amplitudes)} amplitudes for {len(periods)} periods"
        )

    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=np.float64)
    values = np.zeros((length, channels))
    channel_meta = []
    for c in range(channels):
        x = np.zeros(length)
        tone_meta = []
        if "tones" in parts:
            for period, base_amp in zip(periods, amplitudes):
                amp = base_amp * rng.uniform(0.5, 1.5)
                phase = rng.uniform(0.0, 2.0 * np.pi)
                x += amp * np.cos(2.0 * np.pi * t / period - phase)
                tone_meta.append({"period": period, "amplitude": amp, "phase": phase})
        if "trend" in parts:
            x += trend_slope * t
        if "noise" in parts:
            x += noise_sigma * rng.standard_normal(length)
        values[:, c] = x
        channel_meta.append({"tones": tone_meta})

    meta = {
        "length": length,
        "channels": channels,
        "seed": seed,
        "parts": list(parts),
        "periods": list(periods),
        "amplitudes": list(amplitudes),
        "trend_slope": trend_slope if "trend" in parts else 0.0,
        "noise_sigma": noise_sigma if "noise" in parts else 0.0,
        "per_channel": channel_meta,
    }
    return values, meta
