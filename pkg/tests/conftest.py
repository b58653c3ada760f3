import importlib

import numpy as np
import pytest

from sepkit import _backend, _kernels_py


def _available_kernels():
    mods = [("python", _kernels_py)]
    try:
        mods.append(("cython", importlib.import_module("sepkit._kernels")))
    except ImportError:
        pass
    return mods


KERNELS = _available_kernels()


@pytest.fixture(params=[name for name, _ in KERNELS])
def kernels(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = dict(KERNELS)[request.param]
    monkeypatch.setattr(_backend, "kernels", mod)
    return mod


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
