import numpy as np
import pytest

from jmgt_pennes import kernels
from jmgt_pennes.kernels import backends

BK = backends()


def _march_inputs(rng, N=50, K=7, tau=1e-6, with_f=True):
    lam = (np.arange(1, K + 1) * np.pi) ** 2
    r = 2.25e6 * (1 + 0.1 * rng.random(N))
    b = 2.25 * (1 + 0.1 * rng.random(N))
    f = rng.standard_normal((N, K)) if with_f else np.zeros((0, 0))
    P, Q, W = (np.zeros((N + 1, K)) for _ in range(3))
    P[0], Q[0], W[0] = rng.standard_normal((3, K))
    r_end, b_end = (r.copy(), b.copy()) if tau == 0 else (np.zeros(N), np.zeros(N))
    f_end = f.copy() if tau == 0 and with_f else np.zeros((0, 0))
    return lam, tau, 1e-6, r, b, f, r_end, b_end, f_end, P, Q, W


@pytest.mark.parametrize("tau", [1e-6, 0.0])
@pytest.mark.parametrize("with_f", [True, False])
def test_march_backends_agree(tau, with_f):
    out = {}
    for name, mod in BK.items():
        args = _march_inputs(np.random.default_rng(5), tau=tau, with_f=with_f)
        mod.midpoint_march_diag(*args)
        out[name] = args[-3:]
    ref = out["python"]
    for name, res in out.items():
        for a, b in zip(res, ref):
            np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13 * np.max(np.abs(b)))


def test_exp_march_backends_agree(rng):
    decay, gain = rng.random(9), rng.random(9)
    g = rng.standard_normal((20, 9))
    res = {}
    for name, mod in BK.items():
        out = np.zeros((21, 9))
        out[0] = 1.0
        mod.exp_march(decay, gain, g, out)
        res[name] = out
    for out in res.values():
        np.testing.assert_array_equal(out, res["python"])


def test_gronwall_recurrence_backends_agree(rng):
    t = np.linspace(0, 2, 41)
    a, b = rng.random(41), rng.random(41)
    res = {}
    for name, mod in BK.items():
        out = np.empty(41)
        mod.gronwall_recurrence(0.7, t, a, b, out)
        res[name] = out
    for out in res.values():
        np.testing.assert_allclose(out, res["python"], rtol=1e-14)


def test_backend_selection():
    assert kernels.BACKEND in BK
    assert "python" in BK
