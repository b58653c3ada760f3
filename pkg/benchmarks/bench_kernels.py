"""Compare the compiled and pure-NumPy kernels on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on both backends (best of N) and the outputs are
checked for agreement.
"""
import argparse
import timeit

import numpy as np

from sepkit import _kernels_py

try:
    from sepkit import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(16000 + 512)
    frames_aligned = rng.standard_normal((64, 512))
    frames_odd = rng.standard_normal((400, 40))
    m8 = rng.standard_normal((8, 8))
    cost = rng.standard_normal((64, 64))
    return [
        ("frame_signal 2 s, K=512, S=256", "frame_signal", (x, 512, 256)),
        ("overlap_add K=512, S=256", "overlap_add", (frames_aligned, 256, 63 * 256 + 512)),
        ("overlap_add K=40, S=16", "overlap_add", (frames_odd, 16, 399 * 16 + 40)),
        ("exhaustive_assignment J=8", "exhaustive_assignment", (m8, True)),
        ("hungarian 64x64", "hungarian", (cost,)),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return a[0] == b[0] and tuple(a[1]) == tuple(b[1])
    return np.array_equal(a, b)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels_c is None:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace` first")
        return
    print(f"{'kernel':<34} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8} {'agree':>6}")
    for label, name, call_args in cases():
        py_fn = getattr(_kernels_py, name)
        c_fn = getattr(_kernels_c, name)
        number = 1 if name == "exhaustive_assignment" else 10
        t_py = min(timeit.repeat(lambda: py_fn(*call_args), number=number, repeat=args.repeat)) / number
        t_c = min(timeit.repeat(lambda: c_fn(*call_args), number=number, repeat=args.repeat)) / number
        agree = same(py_fn(*call_args), c_fn(*call_args))
        print(f"{label:<34} {1e3 * t_py:>12.3f} {1e3 * t_c:>12.3f} {t_py / t_c:>7.1f}x {str(agree):>6}")


if __name__ == "__main__":
    main()
