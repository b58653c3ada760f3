"""Encoder-masker-decoder audio source separation toolkit.

Filterbanks, oracle maskers, phase reconstruction, permutation-invariant
losses, separation metrics and a staged command-line recipe.
"""
from ._backend import BACKEND
from .evaluation import EvalReport, bss_eval, evaluate_set, si_sdr_improvement
from .filterbanks import (
    Filterbank,
    TimeFrequencyRep,
    apply_mask,
    decode,
    encode,
    make_analytic_free_filterbank,
    make_free_filterbank,
    make_sinc_filterbank,
    make_stft_filterbank,
    pseudo_inverse,
)
from .losses import pairwise_loss, pairwise_matrix, pit_from_matrix, pit_loss, si_sdr
from .masking import oracle_masks, oracle_separate
from .phase import PhaseReconConfig, griffin_lim, misi
from .signal import SourceSet, Waveform, make_mixture, read_wav, write_wav

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EvalReport",
    "Filterbank",
    "PhaseReconConfig",
    "SourceSet",
    "TimeFrequencyRep",
    "Waveform",
    "apply_mask",
    "bss_eval",
    "decode",
    "encode",
    "evaluate_set",
    "griffin_lim",
    "make_analytic_free_filterbank",
    "make_free_filterbank",
    "make_mixture",
    "make_sinc_filterbank",
    "make_stft_filterbank",
    "misi",
    "oracle_masks",
    "oracle_separate",
    "pairwise_loss",
    "pairwise_matrix",
    "pit_from_matrix",
    "pit_loss",
    "pseudo_inverse",
    "read_wav",
    "si_sdr",
    "si_sdr_improvement",
    "write_wav",
]
