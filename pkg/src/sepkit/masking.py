"""Oracle maskers: ideal masks computed from encoded ground-truth sources.

They take the place of a trained masker so that the encoder-masker-decoder
chain can be run and scored without any learning.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .filterbanks import Filterbank, TimeFrequencyRep, apply_mask, decode, default_synthesis, encode
from .signal import SourceSet, Waveform

ORACLE_KINDS = ("ibm", "irm", "magnitude_ratio")
EPS = 1e-10


def oracle_masks(sources_rep: Sequence[TimeFrequencyRep], kind: str = "irm") -> list[np.ndarray]:
    """One real mask per source.

    ibm
        1 where the source has the largest magnitude (ties go to the lowest
        index), else 0.
    irm
        ``|S_j|^2 / (sum_i |S_i|^2 + eps)``
    magnitude_ratio
        ``|S_j| / (sum_i |S_i| + eps)``

    Bins where every source is exactly silent get ``1 / J`` for the ratio
    masks.
    """
    if kind not in ORACLE_KINDS:
        raise ValueError(f"unknown oracle mask kind {kind!r}; expected one of {ORACLE_KINDS}")
    if len(sources_rep) == 0:
        raise ValueError("need at least one source representation")
    shape = sources_rep[0].frames.shape
    for j, rep in enumerate(sources_rep):
        if rep.frames.shape != shape:
            raise ValueError(f"source {j} representation has shape {rep.frames.shape}, expected {shape}")
    mags = np.stack([np.abs(rep.frames) for rep in sources_rep])
    J = mags.shape[0]
    if kind == "ibm":
        winner = np.argmax(mags, axis=0)
        return [(winner == j).astype(np.float64) for j in range(J)]
    power = mags ** 2 if kind == "irm" else mags
    total = power.sum(axis=0)
    masks = power / (total + EPS)
    masks[:, total == 0] = 1.0 / J
    return list(masks)


def oracle_separate(mixture: Waveform, truth: SourceSet, fb: Filterbank, kind: str = "irm",
                    synthesis: Filterbank | None = None) -> SourceSet:
    """Encode, mask with oracle masks from the truth, decode.

    The decoder defaults to :func:`~sepkit.filterbanks.default_synthesis`
    (STFT synthesis or the pseudo-inverse of ``fb``).
    """
    if len(mixture) != truth.n_samples:
        raise ValueError(f"mixture has {len(mixture)} samples, sources have {truth.n_samples}")
    if mixture.sample_rate_hz != truth.sample_rate_hz:
        raise ValueError("mixture and sources have different sample rates")
    synthesis = default_synthesis(fb) if synthesis is None else synthesis
    X = encode(fb, mixture)
    masks = oracle_masks([encode(fb, s) for s in truth], kind)
    estimates = [decode(synthesis, apply_mask(X, m, "magnitude")) for m in masks]
    return SourceSet(tuple(estimates))
