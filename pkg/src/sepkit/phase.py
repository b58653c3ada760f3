"""Iterative phase recovery: Griffin-Lim (with optional momentum) and MISI."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .filterbanks import Filterbank, TimeFrequencyRep, decode, encode, stft_synthesis
from .signal import SourceSet, Waveform

INIT_PHASES = ("zero", "random", "mixture")


@dataclass(frozen=True)
class PhaseReconConfig:
    """Iteration settings.

    ``momentum=0`` is classic Griffin-Lim; values near 1 give the accelerated
    variant. ``seed`` is only used by ``init_phase="random"``.
    """

    n_iters: int = 32
    momentum: float = 0.99
    init_phase: str = "zero"
    seed: int = 0

    def __post_init__(self):
        if self.n_iters < 1:
            raise ValueError(f"n_iters must be >= 1, got {self.n_iters}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.init_phase not in INIT_PHASES:
            raise ValueError(f"init_phase must be one of {INIT_PHASES}, got {self.init_phase!r}")


def _check_stft(fb):
    if fb.kind != "stft":
        raise ValueError(f"phase reconstruction needs an stft filterbank, got kind={fb.kind!r}")


def _bin_weights(fb):
    # Interior bins stand for a conjugate pair of the full spectrum.
    w = np.full(fb.n_channels, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w[:, None]


def _spectral_error(rep_frames, target, weights, target_norm):
    if target_norm == 0:
        return 0.0
    diff = np.abs(rep_frames) - target
    return float(np.sqrt(np.sum(weights * diff * diff)) / target_norm)


def _initial_phase(shape, cfg, reference):
    if cfg.init_phase == "zero":
        return np.zeros(shape)
    if cfg.init_phase == "random":
        rng = np.random.default_rng(cfg.seed)
        return rng.uniform(-np.pi, np.pi, size=shape)
    if reference is None:
        raise ValueError("init_phase='mixture' needs a reference representation")
    return np.angle(reference.frames)


def griffin_lim(target_mag, fb: Filterbank, cfg: PhaseReconConfig = PhaseReconConfig(),
                n_samples: int | None = None, sample_rate_hz: int | None = None,
                init_rep: TimeFrequencyRep | None = None):
    """Recover a signal whose encoding has magnitude ``target_mag``.

    ``target_mag`` is either a real ``(n_channels, n_frames)`` array or a
    :class:`TimeFrequencyRep` (its absolute value and framing are used).
    Each iteration decodes ``target * exp(i phase)``, re-encodes, records the
    relative magnitude error and takes the phase of the (momentum-extrapolated)
    re-encoding.

    The error is measured over the full two-sided spectrum (interior bins count
    twice), the norm in which the decoder is a least-squares projection.

    Returns the final waveform and the per-iteration error trace.
    """
    _check_stft(fb)
    if isinstance(target_mag, TimeFrequencyRep):
        n_samples = target_mag.n_samples if n_samples is None else n_samples
        sample_rate_hz = target_mag.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
        target = np.abs(target_mag.frames)
    else:
        target = np.asarray(target_mag, dtype=np.float64)
    if target.ndim != 2 or target.shape[0] != fb.n_channels:
        raise ValueError(f"target magnitude must be ({fb.n_channels}, n_frames), got {target.shape}")
    if np.any(target < 0):
        raise ValueError("target magnitudes must be non-negative")
    K, S = fb.kernel_size, fb.stride
    if n_samples is None:
        # Longest length consistent with the frame count.
        n_samples = (target.shape[1] - 1) * S + K - 2 * (K - S)
    synth = stft_synthesis(fb)
    weights = _bin_weights(fb)
    target_norm = float(np.sqrt(np.sum(weights * target * target)))
    phase = _initial_phase(target.shape, cfg, init_rep)
    frame = TimeFrequencyRep(target * np.exp(1j * phase), S, K, sample_rate_hz or 1, n_samples)
    trace = []
    prev = None
    x = None
    for _ in range(cfg.n_iters):
        x = decode(synth, frame)
        rebuilt = encode(fb, x).frames
        trace.append(_spectral_error(rebuilt, target, weights, target_norm))
        if cfg.momentum > 0 and prev is not None:
            candidate = rebuilt + cfg.momentum * (rebuilt - prev)
        else:
            candidate = rebuilt
        prev = rebuilt
        frame = frame.with_frames(target * np.exp(1j * np.angle(candidate)))
    return x, trace


def misi(mixture: Waveform, target_mags: Sequence, fb: Filterbank,
         cfg: PhaseReconConfig = PhaseReconConfig(momentum=0.0, init_phase="mixture"),
         return_trace: bool = False):
    """Multi-input spectrogram inversion.

    Phases start from the mixture encoding (or as ``cfg.init_phase`` says).
    Every iteration decodes each source from its target magnitude and current
    phase, spreads the mixture residual equally over the sources, and takes
    the new phases from the corrected estimates. The returned estimates are
    the corrected ones, so they sum to the mixture.

    With ``return_trace=True`` also returns the max-abs mixture residual
    after each redistribution.
    """
    _check_stft(fb)
    J = len(target_mags)
    if J < 2:
        raise ValueError(f"MISI needs at least 2 sources, got {J}")
    X = encode(fb, mixture)
    targets = [np.asarray(m, dtype=np.float64) for m in target_mags]
    for j, m in enumerate(targets):
        if m.shape != X.frames.shape:
            raise ValueError(
                f"target magnitude {j} has shape {m.shape}, mixture encoding has {X.frames.shape}"
            )
        if np.any(m < 0):
            raise ValueError("target magnitudes must be non-negative")
    synth = stft_synthesis(fb)
    x = mixture.samples
    if cfg.init_phase == "mixture":
        phases = [np.angle(X.frames)] * J
    else:
        phases = [_initial_phase(X.frames.shape, cfg, X) for _ in range(J)]
    residuals = []
    prev = [None] * J
    estimates = None
    for _ in range(cfg.n_iters):
        decoded = [decode(synth, X.with_frames(m * np.exp(1j * p))).samples for m, p in zip(targets, phases)]
        delta = x - np.sum(decoded, axis=0)
        estimates = [d + delta / J for d in decoded]
        residuals.append(float(np.max(np.abs(x - np.sum(estimates, axis=0)))))
        new_phases = []
        for j, est in enumerate(estimates):
            rebuilt = encode(fb, Waveform(est, mixture.sample_rate_hz)).frames
            if cfg.momentum > 0 and prev[j] is not None:
                candidate = rebuilt + cfg.momentum * (rebuilt - prev[j])
            else:
                candidate = rebuilt
            prev[j] = rebuilt
            new_phases.append(np.angle(candidate))
        phases = new_phases
    result = SourceSet(tuple(Waveform(e, mixture.sample_rate_hz) for e in estimates))
    if return_trace:
        return result, residuals
    return result
