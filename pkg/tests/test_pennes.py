import numpy as np
import pytest

from jmgt_pennes import pennes
from jmgt_pennes.errors import GridMismatch, NonFiniteState
from jmgt_pennes.model import CoefficientModel, PhysicalParams, eval_medium
from jmgt_pennes.pennes import ThermalState, compat_theta1
from jmgt_pennes.spectral import BoxGrid, SpectralField, hnorm2, pointwise_product

PI = np.pi
UNIT = PhysicalParams(rho_a=1.0, C_a=1.0, kappa_a=1.0, rho_b=1.0, C_b=1.0, W=1.0)


def test_compat_examples(params):
    g = BoxGrid((1.0,), (6,))
    out = compat_theta1(g.mode(1, amplitude=0.4), None, params)
    expected = -0.4 * (params.kappa_a * PI**2 + params.ell) / params.m
    assert out.coeffs[0] == pytest.approx(expected, rel=1e-14)
    assert not np.any(out.coeffs[1:])
    assert not np.any(compat_theta1(g.zeros(), None, params).coeffs)


def test_compat_with_quadratic_source(params, model):
    g = BoxGrid((1.0,), (8,))
    p1 = g.mode(1)
    phi0 = float(eval_medium(model, params, 0.0).phi)
    g0 = pointwise_product(phi0 * p1.physical(), p1)
    out = compat_theta1(g.zeros(), g0, params)
    np.testing.assert_allclose(out.coeffs, g0.coeffs / params.m, rtol=1e-15)
    # phi(0) * phi_1^2 = 2 phi(0) sin^2(pi x); its first sine coefficient is 8 phi(0)/(3 pi)
    assert out.coeffs[0] == pytest.approx(8 * phi0 / (3 * PI) / params.m, rel=1e-12)


def test_decay_example(backend):
    g = BoxGrid((1.0,), (3,))
    traj = pennes.solve(g.mode(1), None, 0.1, 0.1, UNIT)
    assert traj.theta[-1, 0] == pytest.approx(0.3372399985899073, rel=1e-13)
    assert traj.theta[-1, 0] == pytest.approx(np.exp(-(PI**2 + 1) * 0.1), rel=1e-14)


@pytest.mark.parametrize("dt", [1e-3, 1e-1])
def test_exact_for_free_decay(backend, dt):
    g = BoxGrid((1.0, 1.0), (3, 2))
    th0 = SpectralField(g, np.arange(1.0, 7.0).reshape(3, 2))
    traj = pennes.solve(th0, None, 1.0, dt, UNIT)
    mu = (g.eigenvalues + 1.0)
    exact = th0.coeffs * np.exp(-np.multiply.outer(traj.times, mu))
    assert np.max(np.abs(traj.theta - exact)) <= 1e-12


def test_steady_limit(backend):
    g = BoxGrid((1.0,), (2,))
    gk = 3.0
    src = lambda t: np.array([gk, 0.0])
    mu = (PI**2 + 1.0)
    T = 20.0 / mu
    traj = pennes.solve(g.zeros(), src, T, T / 200, UNIT)
    assert abs(traj.theta[-1, 0] - gk / (PI**2 + 1.0)) <= 1e-8


def test_second_order_time_dependent_source():
    g = BoxGrid((1.0,), (1,))
    mu = PI**2 + 1.0
    exact = (mu * np.sin(1.0) - np.cos(1.0) + np.exp(-mu)) / (mu**2 + 1)
    errs = []
    for n in (20, 40, 80):
        traj = pennes.solve(g.zeros(), lambda t: np.array([np.sin(t)]), 1.0, 1.0 / n, UNIT)
        errs.append(abs(traj.theta[-1, 0] - exact))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)
    assert np.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.2)


def test_theta_t_satisfies_equation(params):
    g = BoxGrid((1.0,), (8,))
    src = lambda t: np.linspace(1, 2, 8) * np.cos(t)
    traj = pennes.solve(g.mode(2), src, 1.0, 0.01, params)
    lhs = params.m * traj.theta_t + (params.kappa_a * g.eigenvalues + params.ell) * traj.theta
    np.testing.assert_allclose(lhs, traj.g, rtol=0, atol=1e-10 * np.max(np.abs(traj.g)))


def test_step_matches_solve(backend, params):
    g = BoxGrid((1.0,), (5,))
    src = lambda t: np.ones(5) * (1 + t)
    traj = pennes.solve(g.mode(1), src, 0.5, 0.1, params)
    s = ThermalState(0.0, g.mode(1), compat_theta1(g.mode(1), src(0.0), params))
    for _ in range(5):
        s = pennes.step(s, src, 0.1, params)
    np.testing.assert_allclose(s.theta.coeffs, traj.theta[-1], rtol=1e-13)
    np.testing.assert_allclose(s.theta_t.coeffs, traj.theta_t[-1], rtol=1e-12)


def test_zero_stays_zero(backend, params):
    g = BoxGrid((1.0,), (4,))
    traj = pennes.solve(g.zeros(), None, 1.0, 0.1, params)
    assert not np.any(traj.theta) and not np.any(traj.theta_t)


def test_non_expansive(backend, rng):
    g = BoxGrid((1.0, 2.0), (6, 4))
    th0 = SpectralField(g, rng.standard_normal(g.modes))
    traj = pennes.solve(th0, None, 0.2, 0.01, UNIT)
    for order in range(4):
        n = hnorm2(g, traj.theta, order)
        assert np.all(np.diff(n) <= 0)


def test_non_finite(params):
    g = BoxGrid((1.0,), (2,))
    with pytest.raises(NonFiniteState):
        pennes.solve(g.mode(1), lambda t: np.array([np.inf, 0.0]), 0.1, 0.05, params)


def test_state_grid_check():
    with pytest.raises(GridMismatch):
        ThermalState(0.0, BoxGrid((1.0,), (2,)).zeros(), BoxGrid((1.0,), (3,)).zeros())


def test_norm_table_and_regularity(params):
    g = BoxGrid((1.0,), (8,))
    src = lambda t: np.exp(-t) * np.linspace(1, 0, 8)
    traj = pennes.solve(g.mode(1) + g.mode(3), src, 0.5, 0.01, params)
    tab = traj.norm_table(params)
    assert tab.shape == (51, 7)
    assert np.all(np.diff(tab[:, 4]) >= 0)
    rep = pennes.regularity_report(traj, params)
    assert np.isfinite(rep["lhs_total"]) and rep["rhs_total"] > 0
    assert set(rep["lhs"]) == {"theta_L2H3", "theta_LinfH2", "theta_t_LinfH1", "theta_t_L2H2",
                               "theta_tt_L2L2"}
