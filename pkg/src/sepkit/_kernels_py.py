"""Pure NumPy/Python versions of the hot kernels.

These mirror ``sepkit._kernels`` (Cython) function for function and are used
when the compiled module is unavailable or ``SEPKIT_PURE_PYTHON=1`` is set.
"""
import itertools
import math

import numpy as np

_CHUNK = 1 << 16


def frame_signal(x, kernel, stride):
    """Contiguous ``(n_frames, kernel)`` copy of the strided frames of ``x``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    view = np.lib.stride_tricks.sliding_window_view(x, kernel)[::stride]
    return np.ascontiguousarray(view)


def overlap_add(frames, stride, out_len):
    """Sum ``frames[f]`` into ``out[f * stride : f * stride + K]``.

    Parameters
    ----------
    frames : np.ndarray, shape=(n_frames, K)
    stride : int
    out_len : int
        Must be at least ``(n_frames - 1) * stride + K``.
    """
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    n_frames, kernel = frames.shape
    out = np.zeros(out_len, dtype=np.float64)
    if n_frames == 0:
        return out
    if kernel % stride == 0:
        # Each stride-sized chunk of a frame lands on a disjoint grid.
        n_chunks = kernel // stride
        for c in range(n_chunks):
            block = frames[:, c * stride:(c + 1) * stride].reshape(-1)
            start = c * stride
            out[start:start + block.size] += block
    else:
        for f in range(n_frames):
            out[f * stride:f * stride + kernel] += frames[f]
    return out


def exhaustive_assignment(m, mean):
    """Minimise the reduced diagonal ``m[perm[j], j]`` over all permutations.

    Permutations are visited in lexicographic order and only a strictly
    smaller value replaces the incumbent, so ties resolve to the
    lexicographically smallest permutation. Values are reduced by a
    sequential left-to-right sum (divided by J for ``mean``).
    """
    m = np.ascontiguousarray(m, dtype=np.float64)
    n = m.shape[0]
    cols = np.arange(n)
    best_loss = math.inf
    best_perm = None
    perms_iter = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(perms_iter, _CHUNK))
        if not chunk:
            break
        perms = np.asarray(chunk, dtype=np.intp)
        vals = m[perms, cols]
        acc = vals[:, 0].copy()
        for j in range(1, n):
            acc += vals[:, j]
        if mean:
            acc /= n
        idx = int(np.argmin(acc))
        if acc[idx] < best_loss:
            best_loss = float(acc[idx])
            best_perm = tuple(int(v) for v in perms[idx])
    return best_loss, best_perm


def hungarian(cost):
    """Minimum-cost perfect matching of a square matrix.

    Shortest augmenting path with row/column potentials, O(n^3).
    Returns ``assign`` with ``assign[row] = col``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    # 1-based bookkeeping; index 0 is the virtual source column.
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    c = cost.tolist()
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [math.inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = math.inf
            j1 = 0
            row = c[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = np.empty(n, dtype=np.intp)
    for j in range(1, n + 1):
        assign[p[j] - 1] = j - 1
    return assign
