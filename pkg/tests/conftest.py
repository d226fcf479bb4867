import importlib

import numpy as np
import pytest

from cirrt import kernels


def _available_backends():
    names = ["python"]
    try:
        importlib.import_module("cirrt._ckernels")
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


BACKENDS = _available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    module = "cirrt._ckernels" if request.param == "compiled" else "cirrt._pykernels"
    return importlib.import_module(module)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def active_backend():
    return kernels.BACKEND
