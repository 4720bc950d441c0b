import numpy as np
import pytest

from jmgt_pennes import kernels
from jmgt_pennes.model import CoefficientModel, PhysicalParams
from jmgt_pennes.spectral import BoxGrid

BACKENDS = sorted(kernels.backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend."""
    mod = kernels.backends()[request.param]
    for name in ("midpoint_march_diag", "exp_march", "gronwall_recurrence"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def params():
    return PhysicalParams()


@pytest.fixture
def model(params):
    return CoefficientModel.certify([1500.0, 2.0, -0.01], params)


@pytest.fixture
def grid1():
    return BoxGrid((1.0,), (16,))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
