import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmgt_pennes import coupler, jmgt
from jmgt_pennes.coupler import (BallSpec, CoupledTrajectory, InitialData, apply_T, hold,
                                 residual_shifted, solve_nonlinear, ynorm, ynorm_diff)
from jmgt_pennes.errors import (ConfigError, DegeneracyLost, MaxIterExceeded, MeshMismatch,
                                NoContraction, SmallDataViolation)
from jmgt_pennes.jmgt import AcousticTrajectory, CoefficientTrack
from jmgt_pennes.model import CoefficientModel, PhysicalParams, eval_medium
from jmgt_pennes.pennes import ThermalTrajectory
from jmgt_pennes.spectral import BoxGrid
from jmgt_pennes.verification import decoupled_params

PI = np.pi
C_POLY = [1500.0, 2.0, -0.01]


def _static(g, times, p=None, theta=None):
    n = len(times)
    z = np.zeros((n,) + g.modes)
    rep = lambda c: z.copy() if c is None else np.broadcast_to(c, z.shape).copy()
    return CoupledTrajectory(AcousticTrajectory(g, times, rep(p), z.copy(), z.copy(), 1e-6),
                             ThermalTrajectory(g, times, rep(theta), z.copy()))


def _model(params):
    return CoefficientModel.certify(C_POLY, params)


def _small_data(g, amp=1e-6):
    return InitialData(g.mode(1, amplitude=amp), g.mode(2, amplitude=0.3 * amp),
                       g.mode(1, amplitude=1e-3))


def test_ynorm_examples():
    g = BoxGrid((1.0,), (4,))
    t = np.linspace(0, 1, 5)
    a = _static(g, t, p=g.mode(1).coeffs)
    zero = _static(g, t)
    assert ynorm_diff(a, a) == 0.0
    assert ynorm_diff(a, zero) == pytest.approx(np.sqrt(1 + PI**2), rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_ynorm_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = BoxGrid((1.0,), (4,))
    t = np.linspace(0, 1, 3)
    mk = lambda: CoupledTrajectory(
        AcousticTrajectory(g, t, *rng.standard_normal((3, 3, 4)), 1e-3),
        ThermalTrajectory(g, t, *rng.standard_normal((2, 3, 4))))
    a, b = mk(), mk()
    assert ynorm_diff(a, b) == ynorm_diff(b, a)
    assert ynorm_diff(a, b) <= ynorm(a) + ynorm(b) + 1e-12


def test_mesh_mismatch():
    g = BoxGrid((1.0,), (4,))
    with pytest.raises(MeshMismatch):
        ynorm_diff(_static(g, np.linspace(0, 1, 5)), _static(g, np.linspace(0, 1, 6)))
    with pytest.raises(MeshMismatch):
        ynorm_diff(_static(g, np.linspace(0, 1, 5)),
                   _static(BoxGrid((1.0,), (5,)), np.linspace(0, 1, 5)))
    x = _static(g, np.linspace(0, 1, 5))
    with pytest.raises(MeshMismatch):
        apply_T(x, _small_data(g), _model(PhysicalParams()), PhysicalParams(), 1.0, 0.5)


def test_zero_fixed_point(params):
    g = BoxGrid((1.0,), (8,))
    data = InitialData(g.zeros(), g.zeros(), g.zeros())
    times = np.arange(11) * 1e-5
    out = apply_T(_static(g, times), data, _model(params), params, 1e-4, 1e-5)
    assert not np.any(out.acoustic.p) and not np.any(out.thermal.theta)
    assert residual_shifted(out, _model(params), params)["acoustic"] == 0.0


def test_decoupled_map_ignores_star(rng):
    params = decoupled_params()
    model = _model(params)
    g = BoxGrid((1.0,), (8,))
    data = _small_data(g)
    T, dt = 1e-4, 1e-5
    times = np.arange(11) * dt
    star1 = _static(g, times)
    star2 = _static(g, times, p=rng.standard_normal(8))
    a = apply_T(star1, data, model, params, T, dt)
    b = apply_T(star2, data, model, params, T, dt)
    assert ynorm_diff(a, b) <= 1e-10 * ynorm(a)


def test_frozen_zero_temperature_matches_constant_run(params, rng):
    # Theta* = 0: the child must match a constant-coefficient run with the
    # product-form source assembled here independently
    model = _model(params)
    g = BoxGrid((1.0,), (12,))
    T, dt = 2e-5, 1e-6
    times = np.arange(21) * dt
    P, Q, W = (rng.standard_normal((21, 12)) * 1e-3 for _ in range(3))
    star = CoupledTrajectory(AcousticTrajectory(g, times, P, Q, W, params.tau),
                             ThermalTrajectory(g, times, np.zeros((21, 12)), np.zeros((21, 12))))
    data = InitialData(g.mode(1, amplitude=1e-3), g.zeros(), g.zeros(),
                       g.mode(1, amplitude=-1e-3 * 2.25e6 * PI**2))
    out = apply_T(star, data, model, params, T, dt)
    med = eval_medium(model, params, 0.0)

    def src(t):
        i = min(int(np.floor(t / dt)), 19)
        s = t / dt - i
        lerp = lambda X: (1 - s) * X[i] + s * X[i + 1]
        p, q, w = (g.to_physical(lerp(X)) for X in (P, Q, W))
        return g.to_spectral(2 * float(med.k) * (q * q + p * w))

    init = jmgt.AcousticState(0.0, data.p0, data.p1, data.p2)
    ref = jmgt.solve(init, CoefficientTrack.constant(float(med.h), float(med.zeta)), src, T, dt,
                     params.tau)
    np.testing.assert_allclose(out.acoustic.p, ref.p, rtol=0, atol=1e-10 * np.max(np.abs(ref.p)))


def test_decoupled_two_iterations():
    params = decoupled_params()
    g = BoxGrid((1.0,), (16,))
    data = InitialData(g.mode(1, amplitude=1e-4), g.mode(2, amplitude=1e-4), g.zeros())
    res = solve_nonlinear(data, _model(params), params, 1e-4, 1e-6)
    assert len(res.report) == 2 and res.report.converged
    assert res.report.ydiff[1] <= 1e-12


def test_small_data_guard(params):
    g = BoxGrid((1.0,), (8,))
    data = InitialData(g.mode(1, amplitude=1e-3), g.mode(1, amplitude=10.0), g.zeros())
    with pytest.raises(SmallDataViolation):
        solve_nonlinear(data, _model(params), params, 1e-4, 1e-5, eta0=1e-3)


def _strong(beta):
    params = PhysicalParams(beta_acous=beta)
    return params, _model(params)


def test_degeneracy_lost():
    params, model = _strong(1e9)
    g = BoxGrid((1.0,), (16,))
    data = InitialData(g.mode(1), g.zeros(), g.zeros())
    with pytest.raises(DegeneracyLost):
        solve_nonlinear(data, model, params, 1e-3, 1e-3 / 128, check_residual=False)


def test_no_contraction():
    params, model = _strong(4e8)
    g = BoxGrid((1.0,), (16,))
    data = InitialData(g.mode(1), g.zeros(), g.zeros())
    with pytest.raises(NoContraction):
        solve_nonlinear(data, model, params, 2e-3, 2e-3 / 128, tol=1e-10, max_iter=30,
                        check_residual=False)


def test_max_iter():
    params, model = _strong(3e8)
    g = BoxGrid((1.0,), (16,))
    data = InitialData(g.mode(1), g.zeros(), g.zeros())
    with pytest.raises(MaxIterExceeded):
        solve_nonlinear(data, model, params, 1e-3, 1e-3 / 128, tol=1e-10, max_iter=3,
                        check_residual=False)


def test_strong_but_contracting_run_is_consistent():
    params, model = _strong(1e9)
    g = BoxGrid((1.0,), (16,))
    data = InitialData(g.mode(1, amplitude=0.1), g.zeros(), g.zeros())
    res = solve_nonlinear(data, model, params, 1e-3, 1e-3 / 128, tol=1e-10)
    assert all(r < 1 for r in res.report.ratio[1:])
    assert res.residuals["acoustic_rel"] <= 1e-6


def test_ball_validation():
    assert BallSpec(0.1, 1.0, 1.0).validate(1e-9, 1) is not None
    for bad in (BallSpec(1.0, 2.0, 1.0), BallSpec(0.5, 0.1, 1.0), BallSpec(0.5, 1.0, -1.0)):
        with pytest.raises(ConfigError):
            bad.validate(1e-9, 1)
    with pytest.raises(ConfigError):
        BallSpec(0.5, 1.0, 1.0).validate(10.0, 2)
    b = BallSpec(0.25, 4.0, 1.0)
    assert b.predictor(0.1, 2) == pytest.approx(1 - 0.2 * 0.25**0.5 * 4.0**0.5)


def test_consistent_p2_balances_equation(params):
    model = _model(params)
    g = BoxGrid((1.0,), (16,))
    data = InitialData(g.mode(1, amplitude=1e-2), g.mode(3, amplitude=1e-2), g.mode(1))
    p2 = coupler.consistent_p2(data, model, params)
    med = eval_medium(model, params, data.theta0.physical())
    lam = g.eigenvalues
    lhs = (1 - 2 * med.k * data.p0.physical()) * p2.physical()
    rhs = (med.h * g.to_physical(-lam * data.p0.coeffs)
           + med.zeta * g.to_physical(-lam * data.p1.coeffs) + 2 * med.k * data.p1.physical() ** 2)
    # equality holds after projection onto the modes
    np.testing.assert_allclose(g.to_spectral(lhs), g.to_spectral(rhs), rtol=1e-9,
                               atol=1e-9 * np.max(np.abs(g.to_spectral(rhs))))


def test_hold_is_constant(params):
    g = BoxGrid((1.0,), (8,))
    x = hold(_small_data(g), _model(params), params, 1e-4, 1e-5)
    assert np.all(x.acoustic.p == x.acoustic.p[0])
    assert np.all(x.thermal.theta_t == x.thermal.theta_t[0])


@pytest.fixture(scope="module")
def small_run():
    params = PhysicalParams()
    model = _model(params)
    g = BoxGrid((1.0,), (32,))
    data = coupler.resolve_data(_small_data(g), model, params)
    T, dt = 5e-4, 5e-4 / 256
    return params, model, data, T, dt, solve_nonlinear(data, model, params, T, dt, tol=1e-10)


def test_fixed_point_consistency(small_run):
    params, model, data, T, dt, res = small_run
    again = apply_T(res.solution, data, model, params, T, dt)
    assert ynorm_diff(res.solution, again) <= 10 * 1e-10 * (1 + ynorm(res.solution))


def test_ball_invariance_and_margin(small_run):
    params, model, data, T, dt, res = small_run
    rep, ball = res.report, res.ball
    for i in range(len(rep)):
        assert rep.accepted[i]
        assert rep.xp1[i] <= ball.eta and rep.xp2[i] <= ball.R1 and rep.xtheta2[i] <= ball.R2
    pred = ball.predictor(model.k_cap, 1)
    assert min(rep.margin) >= pred - 1e-3
    assert np.min(coupler.degeneracy_margin(res.solution, model, params)) == min(rep.margin)


def test_residual_sensitivity(small_run):
    params, model, data, T, dt, res = small_run
    x = res.solution
    base = residual_shifted(x, model, params)
    a = x.acoustic
    scaled = CoupledTrajectory(
        AcousticTrajectory(a.grid, a.times, 1.01 * a.p, a.pt, a.ptt, a.tau), x.thermal)
    assert residual_shifted(scaled, model, params)["acoustic"] > 10 * base["acoustic"]


def test_contraction_improves_with_shorter_horizon(params):
    model = _model(params)
    g = BoxGrid((1.0,), (32,))
    data = _small_data(g)
    ratio = []
    for T in (1e-3, 5e-4):
        res = solve_nonlinear(data, model, params, T, 1e-3 / 256, tol=1e-12, check_residual=False)
        ratio.append(res.report.ratio[1])
    assert ratio[1] < ratio[0] < 1


def test_iteration_csv(tmp_path, small_run):
    rep = small_run[-1].report
    rep.write_csv(tmp_path / "it.csv")
    lines = (tmp_path / "it.csv").read_text().splitlines()
    assert lines[0] == "n,ydiff,ratio,xp1,xp2,xtheta2,margin,accepted"
    assert len(lines) == len(rep) + 1
