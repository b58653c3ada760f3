import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from conftest import KERNELS
from sepkit import _backend


def naive_overlap_add(frames, stride, out_len):
    out = np.zeros(out_len)
    for f, row in enumerate(frames):
        for t, v in enumerate(row):
            out[f * stride + t] += v
    return out


@pytest.mark.parametrize("kernel,stride", [(8, 4), (8, 3), (5, 5), (6, 1)])
def test_overlap_add_matches_loop(kernels, rng, kernel, stride):
    frames = rng.standard_normal((7, kernel))
    out_len = 6 * stride + kernel + 2
    got = _backend.overlap_add(frames, stride, out_len)
    np.testing.assert_allclose(got, naive_overlap_add(frames, stride, out_len), atol=1e-12)


@pytest.mark.parametrize("kernel,stride", [(8, 4), (7, 3), (4, 4)])
def test_frame_signal(kernels, rng, kernel, stride):
    x = rng.standard_normal(40)
    got = _backend.frame_signal(x, kernel, stride)
    n = (x.size - kernel) // stride + 1
    want = np.array([x[f * stride:f * stride + kernel] for f in range(n)])
    assert got.flags.c_contiguous
    np.testing.assert_array_equal(got, want)


def brute_force_assignment(m, mean):
    best, best_perm = np.inf, None
    n = m.shape[0]
    for perm in itertools.permutations(range(n)):
        s = m[perm[0], 0]
        for j in range(1, n):
            s += m[perm[j], j]
        if mean:
            s /= n
        if s < best:
            best, best_perm = s, perm
    return best, best_perm


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7])
@pytest.mark.parametrize("mean", [True, False])
def test_exhaustive_matches_brute_force(kernels, rng, n, mean):
    for _ in range(5):
        m = rng.standard_normal((n, n))
        assert _backend.exhaustive_assignment(m, mean) == brute_force_assignment(m, mean)


def test_exhaustive_tie_breaks_lexicographically(kernels):
    m = np.zeros((4, 4))
    assert _backend.exhaustive_assignment(m, True) == (0.0, (0, 1, 2, 3))
    m = np.ones((3, 3))
    m[2, 0] = m[0, 1] = m[1, 2] = 0.0
    m[1, 0] = m[2, 1] = m[0, 2] = 0.0
    # Two zero-cost permutations, (1, 2, 0) < (2, 0, 1).
    assert _backend.exhaustive_assignment(m, False) == (0.0, (1, 2, 0))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
def test_hungarian_matches_scipy(n, seed):
    cost = np.random.default_rng(seed).standard_normal((n, n))
    rows, cols = linear_sum_assignment(cost)
    for _, mod in KERNELS:
        assign = mod.hungarian(cost)
        assert sorted(assign) == list(range(n))
        assert cost[np.arange(n), assign].sum() == pytest.approx(cost[rows, cols].sum(), abs=1e-12)


def test_hungarian_integer_ties(kernels):
    cost = np.array([[4, 1, 3], [2, 0, 5], [3, 2, 2]], dtype=float)
    assign = _backend.hungarian(cost)
    assert cost[np.arange(3), assign].sum() == 5.0
