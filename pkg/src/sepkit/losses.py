"""Pairwise separation losses and permutation-invariant (PIT) reduction.

All losses are "lower is better"; the SDR family is negated. A PIT loss is the
minimum over permutations of a reduced per-source loss. Building the ``J x J``
pairwise matrix first costs ``J**2`` loss evaluations, after which the search
over permutations only indexes into the matrix.

Permutations are tuples ``perm`` where ``perm[j]`` is the estimate assigned to
reference slot ``j``.
"""
from __future__ import annotations

import contextlib
import contextvars
import itertools
from typing import Callable, Sequence

import numpy as np

from . import _backend

LOSS_KINDS = ("neg_si_sdr", "neg_sd_sdr", "neg_snr", "mse")
REDUCE_FNS = ("mean", "sum")
ALGORITHMS = ("exhaustive", "hungarian")
EPS = 1e-8
MAX_EXHAUSTIVE_SOURCES = 10

_counter: contextvars.ContextVar = contextvars.ContextVar("pairwise_loss_counter", default=None)


class _Counter:
    def __init__(self):
        self.count = 0


@contextlib.contextmanager
def count_pairwise_evaluations():
    """Count :func:`pairwise_loss` calls made inside the block.

    >>> with count_pairwise_evaluations() as c:
    ...     _ = pairwise_loss("mse", [1.0, 2.0], [1.0, 2.0])
    >>> c.count
    1
    """
    counter = _Counter()
    token = _counter.set(counter)
    try:
        yield counter
    finally:
        _counter.reset(token)


def _signal(x):
    return np.asarray(x, dtype=np.float64).reshape(-1)


def pairwise_loss(kind: str, est, ref) -> float:
    """Loss between one estimate and one reference.

    neg_si_sdr
        Both signals mean-centred, target ``<est, ref> / |ref|^2 * ref``,
        value ``-10 log10((|target|^2 + eps) / (|est - target|^2 + eps))``.
    neg_sd_sdr
        Same target, but the error is ``est - ref``.
    neg_snr
        ``-10 log10((|ref|^2 + eps) / (|est - ref|^2 + eps))`` on raw signals.
    mse
        Mean squared sample difference.
    """
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    est = _signal(est)
    ref = _signal(ref)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: estimate {est.size}, reference {ref.size}")
    counter = _counter.get()
    if counter is not None:
        counter.count += 1
    if kind == "mse":
        d = est - ref
        return float(np.mean(d * d))
    if not np.any(ref):
        raise ValueError(f"{kind} is undefined for an all-zero reference")
    if kind == "neg_snr":
        d = est - ref
        return float(-10.0 * np.log10((np.dot(ref, ref) + EPS) / (np.dot(d, d) + EPS)))
    est = est - est.mean()
    ref = ref - ref.mean()
    ref_energy = np.dot(ref, ref)
    if ref_energy == 0:
        raise ValueError(f"{kind} is undefined for a constant reference")
    target = (np.dot(est, ref) / ref_energy) * ref
    err = est - target if kind == "neg_si_sdr" else est - ref
    return float(-10.0 * np.log10((np.dot(target, target) + EPS) / (np.dot(err, err) + EPS)))


def si_sdr(est, ref) -> float:
    """Scale-invariant SDR in dB (higher is better)."""
    return -pairwise_loss("neg_si_sdr", est, ref)


def pairwise_matrix(kind: str, ests, refs) -> np.ndarray:
    """``m[i, j] = pairwise_loss(kind, ests[i], refs[j])``; exactly ``J**2`` calls."""
    ests = list(ests)
    refs = list(refs)
    if len(ests) != len(refs):
        raise ValueError(f"got {len(ests)} estimates for {len(refs)} references")
    J = len(refs)
    m = np.empty((J, J))
    for i in range(J):
        for j in range(J):
            m[i, j] = pairwise_loss(kind, ests[i], refs[j])
    return m


def reduce_values(values: Sequence[float], reduce: str) -> float:
    """Left-to-right sum, divided by the count for ``mean``.

    The compiled and NumPy kernels accumulate in the same order, so results
    agree bit for bit.
    """
    if reduce not in REDUCE_FNS:
        raise ValueError(f"unknown reduce {reduce!r}; expected one of {REDUCE_FNS}")
    it = iter(values)
    total = float(next(it))
    n = 1
    for v in it:
        total += float(v)
        n += 1
    return total / n if reduce == "mean" else total


def pit_from_matrix(m, reduce: str = "mean", algorithm: str = "exhaustive"):
    """Best permutation for a pairwise loss matrix (rows estimates, columns references).

    ``exhaustive`` breaks ties towards the lexicographically smallest
    permutation. ``hungarian`` solves the assignment in ``O(J**3)``; its loss
    equals the exhaustive one, the permutation may differ only on ties.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"pairwise loss matrix must be square, got shape {m.shape}")
    if reduce not in REDUCE_FNS:
        raise ValueError(f"unknown reduce {reduce!r}; expected one of {REDUCE_FNS}")
    J = m.shape[0]
    if J == 0:
        raise ValueError("empty pairwise loss matrix")
    if algorithm == "exhaustive":
        if J > MAX_EXHAUSTIVE_SOURCES:
            raise ValueError(
                f"exhaustive PIT limited to J <= {MAX_EXHAUSTIVE_SOURCES} (got {J}); use algorithm='hungarian'"
            )
        loss, perm = _backend.exhaustive_assignment(m, reduce == "mean")
        if perm is None:
            raise ValueError("pairwise loss matrix has no finite permutation")
        return float(loss), tuple(perm)
    if algorithm == "hungarian":
        # Rows of the transposed cost are reference slots.
        assign = _backend.hungarian(m.T)
        perm = tuple(int(i) for i in assign)
        return reduce_values([m[perm[j], j] for j in range(J)], reduce), perm
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def pit_loss(kind: str, ests, refs, reduce: str = "mean", algorithm: str = "exhaustive",
             set_loss: Callable | None = None):
    """PIT loss and best permutation.

    The default path builds the pairwise matrix (``J**2`` evaluations) and
    searches it. When ``set_loss(permuted_ests, refs)`` is given, every
    permutation is scored by calling it directly (``J!`` calls) instead.
    """
    ests = list(ests)
    refs = list(refs)
    if len(ests) != len(refs):
        raise ValueError(f"got {len(ests)} estimates for {len(refs)} references")
    if set_loss is None:
        return pit_from_matrix(pairwise_matrix(kind, ests, refs), reduce, algorithm)
    J = len(refs)
    if J > MAX_EXHAUSTIVE_SOURCES:
        raise ValueError(f"explicit permutation search limited to J <= {MAX_EXHAUSTIVE_SOURCES}")
    best_loss = np.inf
    best_perm = None
    for perm in itertools.permutations(range(J)):
        value = float(set_loss([ests[i] for i in perm], refs))
        if value < best_loss:
            best_loss, best_perm = value, perm
    return best_loss, best_perm


def reduced_pairwise_loss(kind: str, reduce: str = "mean") -> Callable:
    """Whole-set loss ``reduce(F(est_j, ref_j) for j)`` for use as ``set_loss``."""

    def loss(ests, refs):
        return reduce_values([pairwise_loss(kind, e, r) for e, r in zip(ests, refs)], reduce)

    return loss
