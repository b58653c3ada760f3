"""Seeded synthetic sources for the recipe.

``harmonic`` sources are a few enveloped partials of a fundamental drawn from
a slot-specific range, plus low-level band-limited noise. ``tones`` sources are
single sinusoids in well-separated bands, for band-disjoint test mixtures.
"""
import zlib

import numpy as np
from scipy.signal import butter, sosfiltfilt

# Fundamental range per source slot (Hz); slots beyond the table double upward.
_F0_RANGES = [(100.0, 150.0), (190.0, 280.0), (350.0, 500.0), (600.0, 850.0)]
_TONE_BANDS = [(250.0, 350.0), (2800.0, 3200.0), (1200.0, 1400.0), (600.0, 700.0)]
_NOISE_LEVEL_DB = -30.0
_FADE_S = 0.01


def utterance_rng(seed: int, utt_id: str) -> np.random.Generator:
    """Per-utterance generator derived from the global seed and the utterance id."""
    return np.random.default_rng([int(seed), zlib.crc32(utt_id.encode())])


def _slot_range(table, slot):
    if slot < len(table):
        return table[slot]
    lo, hi = table[-1]
    factor = 2.0 ** (slot - len(table) + 1)
    return lo * factor, hi * factor


def _fade(n, rate):
    k = min(n // 2, int(_FADE_S * rate))
    env = np.ones(n)
    if k > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(k) / k)
        env[:k] = ramp
        env[n - k:] = ramp[::-1]
    return env


def harmonic_source(rng, slot, n_samples, rate):
    t = np.arange(n_samples) / rate
    nyquist = rate / 2.0
    lo, hi = _slot_range(_F0_RANGES, slot)
    f0 = rng.uniform(lo, min(hi, 0.45 * nyquist))
    max_harm = max(1, int(0.9 * nyquist // f0))
    n_partials = int(rng.integers(2, 6))
    harmonics = np.sort(rng.choice(np.arange(1, max(max_harm, n_partials) + 1), size=n_partials, replace=False))
    harmonics = harmonics[harmonics * f0 < 0.9 * nyquist]
    if harmonics.size == 0:
        harmonics = np.array([1])
    x = np.zeros(n_samples)
    for h in harmonics:
        amp = rng.uniform(0.3, 1.0) / h
        x += amp * np.sin(2.0 * np.pi * h * f0 * t + rng.uniform(0.0, 2.0 * np.pi))
    am_rate = rng.uniform(0.5, 3.0)
    env = 0.6 + 0.4 * np.sin(2.0 * np.pi * am_rate * t + rng.uniform(0.0, 2.0 * np.pi))
    x *= env
    band = (f0 / nyquist, min(0.95, 8.0 * f0 / nyquist))
    sos = butter(4, band, btype="bandpass", output="sos")
    noise = sosfiltfilt(sos, rng.standard_normal(n_samples))
    tonal_rms = np.sqrt(np.mean(x * x))
    noise *= tonal_rms * 10.0 ** (_NOISE_LEVEL_DB / 20.0) / max(np.sqrt(np.mean(noise * noise)), 1e-12)
    return (x + noise) * _fade(n_samples, rate)


def tone_source(rng, slot, n_samples, rate):
    lo, hi = _slot_range(_TONE_BANDS, slot)
    hi = min(hi, 0.45 * rate)
    f = rng.uniform(min(lo, hi), hi)
    t = np.arange(n_samples) / rate
    return np.sin(2.0 * np.pi * f * t + rng.uniform(0.0, 2.0 * np.pi)) * _fade(n_samples, rate)


def background_noise(rng, n_samples, rate):
    sos = butter(2, 0.9, btype="lowpass", output="sos")
    return sosfiltfilt(sos, rng.standard_normal(n_samples))


GENERATORS = {"harmonic": harmonic_source, "tones": tone_source}
