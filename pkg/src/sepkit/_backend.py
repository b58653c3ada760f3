"""Select the kernel implementation at import time.

The compiled extension is preferred. Setting ``SEPKIT_PURE_PYTHON=1`` in the
environment forces the NumPy fallback, as does a missing build.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("SEPKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def frame_signal(x, kernel, stride):
    return kernels.frame_signal(np.ascontiguousarray(x, dtype=np.float64), int(kernel), int(stride))


def overlap_add(frames, stride, out_len):
    return kernels.overlap_add(np.ascontiguousarray(frames, dtype=np.float64), int(stride), int(out_len))


def exhaustive_assignment(m, mean):
    return kernels.exhaustive_assignment(np.ascontiguousarray(m, dtype=np.float64), bool(mean))


def hungarian(cost):
    return kernels.hungarian(cost)
