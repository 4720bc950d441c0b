import numpy as np
import pytest

from jmgt_pennes import jmgt, oracles
from jmgt_pennes.errors import CoefficientFloorViolated, GridMismatch, SolveDiverged
from jmgt_pennes.jmgt import AcousticState, CoefficientTrack
from jmgt_pennes.spectral import BoxGrid, SpectralField, hnorm2
from jmgt_pennes.verification import SM_B, SM_R, SM_TAU

PI = np.pi


def _state(g, p, q, w, t=0.0):
    return AcousticState(t, SpectralField(g, p), SpectralField(g, q), SpectralField(g, w))


def test_state_grid_check():
    with pytest.raises(GridMismatch):
        AcousticState(0.0, BoxGrid((1.0,), (4,)).zeros(), BoxGrid((1.0,), (5,)).zeros(),
                      BoxGrid((1.0,), (4,)).zeros())


def test_zero_stays_zero(backend, grid1):
    z = np.zeros(grid1.modes)
    traj = jmgt.solve(_state(grid1, z, z, z), CoefficientTrack.constant(1.0, 1.0), None, 1.0, 0.1,
                      0.01)
    assert not np.any(traj.p) and not np.any(traj.pt) and not np.any(traj.ptt)


def test_zero_interval_returns_initial(grid1, rng):
    init = _state(grid1, *rng.standard_normal((3,) + grid1.modes))
    traj = jmgt.solve(init, CoefficientTrack.constant(1.0, 1.0), None, 0.0, 0.1, 0.01)
    assert len(traj) == 1
    np.testing.assert_array_equal(traj.final.p.coeffs, init.p.coeffs)


def test_one_step_local_error():
    # local error of a second-order step scales like dt^3
    g = BoxGrid((1.0,), (1,))
    lam = PI**2
    p0, p1, p2 = 1.0, 0.3, -SM_R * lam
    init = _state(g, [p0], [p1], [p2])
    errs = []
    for dt in (1e-4, 5e-5):
        out = jmgt.step(init, CoefficientTrack.constant(SM_R, SM_B), None, dt, SM_TAU)
        ref = oracles.mgt_mode(SM_TAU, lam, SM_R, SM_B, p0, p1, p2, dt)
        errs.append(abs(out.p.coeffs[0] - ref[0]))
    # dt * |fast root| = 100 here, so the stiff mode sharpens rather than spoils the rate
    assert np.log2(errs[0] / errs[1]) >= 2.8


def test_step_matches_solve(backend, grid1, rng):
    init = _state(grid1, *rng.standard_normal((3,) + grid1.modes))
    track = CoefficientTrack(lambda t: (1.0 + t, 0.5), r0=1.0, b0=0.5)
    traj = jmgt.solve(init, track, None, 0.5, 0.1, 0.01)
    s = init
    for _ in range(5):
        s = jmgt.step(s, track, None, 0.1, 0.01)
    np.testing.assert_allclose(traj.final.p.coeffs, s.p.coeffs, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(traj.final.ptt.coeffs, s.ptt.coeffs, rtol=1e-11, atol=1e-12)


def test_variable_coefficient_path_matches_constant(grid1, rng):
    # an x-array coefficient that happens to be constant takes the iterative path
    init = _state(grid1, *rng.standard_normal((3,) + grid1.modes))
    ones = np.ones(grid1.phys_shape)
    arr = CoefficientTrack(lambda t: (2.0 * ones, 0.3 * ones), r0=2.0, b0=0.3)
    a = jmgt.solve(init, arr, None, 0.2, 0.02, 0.01)
    b = jmgt.solve(init, CoefficientTrack.constant(2.0, 0.3), None, 0.2, 0.02, 0.01)
    np.testing.assert_allclose(a.p, b.p, rtol=1e-9, atol=1e-10)


def test_westervelt_branch_second_order():
    g = BoxGrid((1.0,), (1,))
    lam, r, b = PI**2, 4.0, 0.2
    # tau = 0: p'' + b lam p' + r lam p = 0
    s = np.roots([1.0, b * lam, r * lam])
    c = np.linalg.solve(np.vander(s, 2, increasing=True).T, [1.0 + 0j, 0.0])
    exact = lambda t: float(np.real(np.sum(c * np.exp(s * t))))
    errs = []
    for n in (100, 200, 400):
        init = _state(g, [1.0], [0.0], [-r * lam])
        traj = jmgt.solve(init, CoefficientTrack.constant(r, b), None, 1.0, 1.0 / n, 0.0)
        errs.append(abs(traj.final.p.coeffs[0] - exact(1.0)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)
    assert np.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.2)


def test_mode_decoupling(backend):
    g = BoxGrid((1.0,), (32,))
    p = np.zeros(32)
    p[4] = 1.0
    traj = jmgt.solve(_state(g, p, 0 * p, -SM_R * g.eigenvalues * p),
                      CoefficientTrack.constant(SM_R, SM_B), None, 1e-3, 1e-3 / 512, SM_TAU)
    others = np.delete(np.abs(np.stack([traj.p, traj.pt, traj.ptt])), 4, axis=-1)
    assert np.max(others) <= 1e-12


def test_superposition(backend, rng):
    g = BoxGrid((1.0,), (16,))
    f1, f2 = rng.standard_normal((2, 16))
    z = np.zeros(16)
    track = CoefficientTrack(lambda t: (1.0 + t, 0.2), r0=1.0, b0=0.2)
    run = lambda f: jmgt.solve(_state(g, z, z, z), track, f, 1.0, 0.01, 0.01).p
    a = run(lambda t: f1 * np.cos(t))
    b = run(lambda t: f2 * t)
    ab = run(lambda t: f1 * np.cos(t) + f2 * t)
    assert np.max(np.abs(ab - a - b)) <= 1e-9 * np.max(np.abs(ab))


def test_discrete_energy_identity():
    g = BoxGrid((1.0,), (64,))
    rng = np.random.default_rng(3)
    c = rng.standard_normal(64) / (1 + np.arange(64)) ** 3
    tau, r, b = 0.01, 1.0, 0.05
    init = _state(g, c, 0 * c, -r * g.eigenvalues * c)
    dt = 1e-3
    traj = jmgt.solve(init, CoefficientTrack.constant(r, b), None, 0.1, dt, tau)
    from jmgt_pennes.diagnostics import energy_flux_residual
    res = energy_flux_residual(traj, r, b)
    assert np.max(np.abs(res)) < 10 * dt**2
    # the midpoint rule keeps the quadratic identity to round-off
    scale = float(np.max(hnorm2(g, traj.ptt, 0)))
    assert np.max(np.abs(res)) <= 1e-10 * scale


def test_floor_violation(grid1):
    track = CoefficientTrack(lambda t: (1.0 - t, 1.0), r0=0.9, b0=0.5)
    z = np.zeros(grid1.modes)
    with pytest.raises(CoefficientFloorViolated):
        jmgt.solve(_state(grid1, z, z, z), track, None, 0.5, 0.05, 0.01)


@pytest.mark.parametrize("kind", ["indefinite", "huge_contrast"])
def test_stage_solver_reports_divergence(grid1, kind):
    (x,) = grid1.axes
    c = np.sin(6 * PI * x) if kind == "indefinite" else 1 + 1e8 * (x > 0.5)
    with pytest.raises(SolveDiverged):
        jmgt._stage_solve(grid1, 1.0, c, np.ones(grid1.modes), grid1.eigenvalues)


def test_dt_must_divide_T(grid1):
    z = np.zeros(grid1.modes)
    with pytest.raises(ValueError):
        jmgt.solve(_state(grid1, z, z, z), CoefficientTrack.constant(1, 1), None, 1.0, 0.3, 0.1)
    with pytest.raises(ValueError):
        jmgt.step(_state(grid1, z, z, z), CoefficientTrack.constant(1, 1), None, 0.0, 0.1)


def test_stride_and_callback(grid1, rng):
    seen = []
    init = _state(grid1, *rng.standard_normal((3,) + grid1.modes))
    traj = jmgt.solve(init, CoefficientTrack.constant(1.0, 1.0), None, 1.0, 0.1, 0.1, stride=3,
                      callback=lambda s: seen.append(s.t))
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    np.testing.assert_allclose(seen, traj.times)
    assert traj.norm_table().shape == (5, 4)


def test_consistent_ptt(grid1):
    p0 = grid1.mode(2)
    p1 = grid1.mode(1, amplitude=0.5)
    out = jmgt.consistent_ptt(p0, p1, CoefficientTrack.constant(3.0, 0.1))
    lam = grid1.eigenvalues
    np.testing.assert_allclose(out.coeffs, -3.0 * lam * p0.coeffs - 0.1 * lam * p1.coeffs)


def test_norm_values(grid1):
    p = grid1.mode(1)
    init = _state(grid1, p.coeffs, p.coeffs, p.coeffs)
    traj = jmgt.solve(init, CoefficientTrack.constant(1.0, 1.0), None, 0.0, 0.1, 0.1)
    assert traj.norm_table()[0, 1] == pytest.approx(PI**2)
    assert float(hnorm2(grid1, traj.ptt[0], 1)) == pytest.approx(PI**2)
