# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: framing, overlap-add, exhaustive permutation search, Hungarian.

Same signatures and results as ``sepkit._kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def frame_signal(const double[::1] x, Py_ssize_t kernel, Py_ssize_t stride):
    cdef Py_ssize_t n_frames = (x.shape[0] - kernel) // stride + 1
    cdef Py_ssize_t f, t, base
    out_arr = np.empty((n_frames, kernel), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for f in range(n_frames):
            base = f * stride
            for t in range(kernel):
                out[f, t] = x[base + t]
    return out_arr


def overlap_add(const double[:, ::1] frames, Py_ssize_t stride, Py_ssize_t out_len):
    cdef Py_ssize_t n_frames = frames.shape[0]
    cdef Py_ssize_t kernel = frames.shape[1]
    cdef Py_ssize_t f, t, base
    out_arr = np.zeros(out_len, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for f in range(n_frames):
            base = f * stride
            for t in range(kernel):
                out[base + t] += frames[f, t]
    return out_arr


cdef inline bint _next_permutation(Py_ssize_t* a, Py_ssize_t n) nogil:
    cdef Py_ssize_t i = n - 2
    cdef Py_ssize_t j, tmp
    while i >= 0 and a[i] >= a[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = n - 1
    while a[j] <= a[i]:
        j -= 1
    tmp = a[i]; a[i] = a[j]; a[j] = tmp
    i += 1
    j = n - 1
    while i < j:
        tmp = a[i]; a[i] = a[j]; a[j] = tmp
        i += 1
        j -= 1
    return True


def exhaustive_assignment(const double[:, ::1] m, bint mean):
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t j
    cdef double s
    cdef double best = INFINITY
    perm_arr = np.arange(n, dtype=np.intp)
    best_arr = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] perm = perm_arr
    cdef Py_ssize_t[::1] best_perm = best_arr
    cdef bint found = False
    with nogil:
        while True:
            s = m[perm[0], 0]
            for j in range(1, n):
                s += m[perm[j], j]
            if mean:
                s = s / n
            if s < best:
                best = s
                found = True
                for j in range(n):
                    best_perm[j] = perm[j]
            if not _next_permutation(&perm[0], n):
                break
    if not found:
        return INFINITY, None
    return best, tuple(int(v) for v in best_arr)


def hungarian(cost_in):
    cdef double[:, ::1] cost = np.ascontiguousarray(cost_in, dtype=np.float64)
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(n + 1)
    minv_arr = np.empty(n + 1)
    p_arr = np.zeros(n + 1, dtype=np.intp)
    way_arr = np.zeros(n + 1, dtype=np.intp)
    used_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] minv = minv_arr
    cdef Py_ssize_t[::1] p = p_arr
    cdef Py_ssize_t[::1] way = way_arr
    cdef unsigned char[::1] used = used_arr
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
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
