"""Fixed-point solve of the coupled JMGT-Pennes system.

One application of the map T freezes an iterate (p*, Theta*) and solves

    tau p_ttt + p_tt - h(Theta*) Lap p - zeta(Theta*) Lap p_t = 2 k(Theta*) ((p*_t)^2 + p* p*_tt)
    m Theta_t - kappa_a Lap Theta + ell Theta = phi(Theta*) (p*_t)^2

with both linear solves reading the same frozen iterate.  Picard iteration
of T from the constant-in-time hold of the data converges to the solution of
the shifted nonlinear system when the data are small and T is short.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import jmgt, pennes
from .errors import (ConfigError, DegeneracyLost, MaxIterExceeded, MeshMismatch,
                     NoContraction, SmallDataViolation)
from .jmgt import AcousticState, AcousticTrajectory, CoefficientTrack
from .model import CoefficientModel, PhysicalParams, eval_medium, eval_medium_slopes
from .pennes import ThermalTrajectory
from .spectral import BoxGrid, SpectralField, hnorm2

log = logging.getLogger(__name__)


@dataclass
class InitialData:
    p0: SpectralField
    p1: SpectralField
    theta0: SpectralField
    p2: Optional[SpectralField] = None

    @property
    def grid(self) -> BoxGrid:
        return self.p0.grid

    def scaled(self, s: float) -> "InitialData":
        """Pressure data multiplied by ``s``; temperature untouched."""
        return InitialData(self.p0 * s, self.p1 * s, self.theta0,
                           None if self.p2 is None else self.p2 * s)


def small_data_norm(data: InitialData, tau: float) -> float:
    """sqrt(||p0||_H1^2 + ||p1||_H1^2 + tau ||p2||^2), full H1 norms."""
    g = data.grid
    s = hnorm2(g, data.p0.coeffs, 1, True) + hnorm2(g, data.p1.coeffs, 1, True)
    if data.p2 is not None:
        s += tau * hnorm2(g, data.p2.coeffs, 0)
    return float(np.sqrt(s))


def large_data_norm(data: InitialData, tau: float) -> float:
    g = data.grid
    s = hnorm2(g, data.p0.coeffs, 2, True) + hnorm2(g, data.p1.coeffs, 2, True)
    if data.p2 is not None:
        s += tau * hnorm2(g, data.p2.coeffs, 1, True)
    return float(np.sqrt(s))


@dataclass(frozen=True)
class BallSpec:
    eta: float
    R1: float
    R2: float

    def predictor(self, k1: float, dims: int) -> float:
        """1 - 2 k1 eta^(1-d/4) R1^(d/4): lower bound on 1 - 2 k(Theta) p."""
        return 1.0 - 2.0 * k1 * self.eta ** (1 - dims / 4) * self.R1 ** (dims / 4)

    def validate(self, k1: float, dims: int) -> "BallSpec":
        if not 0 < self.eta < 1:
            raise ConfigError("solve.ball.eta", f"need 0 < eta < 1, got {self.eta}")
        if self.eta > self.R1:
            raise ConfigError("solve.ball.R1", "need eta <= R1")
        if self.R2 < 0:
            raise ConfigError("solve.ball.R2", "need R2 >= 0")
        if not self.predictor(k1, dims) > 0:
            raise ConfigError("solve.ball", "degeneracy predictor is not positive")
        return self


def default_ball(data: InitialData, tau: float, factor: float = 4.0) -> BallSpec:
    """Radii from the data norms times ``factor``."""
    th = float(np.sqrt(hnorm2(data.grid, data.theta0.coeffs, 3, True)))
    return BallSpec(factor * small_data_norm(data, tau), factor * large_data_norm(data, tau),
                    factor * th)


class CoupledTrajectory(NamedTuple):
    acoustic: AcousticTrajectory
    thermal: ThermalTrajectory


# -- norms -------------------------------------------------------------------

def _sup(grid, arr, order):
    return float(np.max(hnorm2(grid, arr, order, True)))


def _int(grid, arr, order, t):
    y = hnorm2(grid, arr, order, True)
    return float(np.trapezoid(y, t)) if len(t) > 1 else 0.0


def xp1_norm(a: AcousticTrajectory) -> float:
    g = a.grid
    return float(np.sqrt(_sup(g, a.p, 1) + _sup(g, a.pt, 1) + a.tau * _sup(g, a.ptt, 0)))


def xp2_norm(a: AcousticTrajectory) -> float:
    g = a.grid
    return float(np.sqrt(_sup(g, a.p, 2) + _sup(g, a.pt, 2) + a.tau * _sup(g, a.ptt, 1)))


def xtheta2_norm(th: ThermalTrajectory) -> float:
    g, t = th.grid, th.times
    return float(np.sqrt(_int(g, th.theta, 3, t) + _sup(g, th.theta_t, 1)
                         + _int(g, th.theta_t, 2, t)))


def _check_mesh(a: CoupledTrajectory, b: CoupledTrajectory):
    ta, tb = a.acoustic.times, b.acoustic.times
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=0, atol=1e-12 * max(1.0, ta[-1])):
        raise MeshMismatch("trajectories are stored on different time meshes")
    if a.acoustic.grid != b.acoustic.grid:
        raise MeshMismatch("trajectories live on different grids")


def ynorm(x: CoupledTrajectory) -> float:
    """(sum of the squared L-infinity-in-time norms of the Y topology)^(1/2)."""
    a, th = x.acoustic, x.thermal
    g = a.grid
    return float(np.sqrt(_sup(g, a.p, 1) + _sup(g, a.pt, 1) + _sup(g, a.ptt, 0)
                         + _sup(g, th.theta, 2) + _sup(g, th.theta_t, 1)))


def _difference(a: CoupledTrajectory, b: CoupledTrajectory) -> CoupledTrajectory:
    _check_mesh(a, b)
    A, B = a.acoustic, b.acoustic
    acoustic = AcousticTrajectory(A.grid, A.times, A.p - B.p, A.pt - B.pt, A.ptt - B.ptt, A.tau)
    thermal = ThermalTrajectory(A.grid, A.times, a.thermal.theta - b.thermal.theta,
                                a.thermal.theta_t - b.thermal.theta_t)
    return CoupledTrajectory(acoustic, thermal)


def ynorm_diff(a: CoupledTrajectory, b: CoupledTrajectory) -> float:
    return ynorm(_difference(a, b))


def xnorm_diff(a: CoupledTrajectory, b: CoupledTrajectory) -> float:
    """Distance in the X_p^2 x X_Theta^2 norm."""
    d = _difference(a, b)
    return float(np.hypot(xp2_norm(d.acoustic), xtheta2_norm(d.thermal)))


def degeneracy_margin(x: CoupledTrajectory, model: CoefficientModel,
                      params: PhysicalParams) -> np.ndarray:
    """min over x of 1 - 2 k(Theta) p at every stored time."""
    g = x.acoustic.grid
    ax = tuple(range(1, g.dims + 1))
    p = g.to_physical(x.acoustic.p)
    k = eval_medium(model, params, g.to_physical(x.thermal.theta)).k
    return np.min(1.0 - 2.0 * k * p, axis=ax)


# -- the map T ------------------------------------------------------------------

class _Frozen:
    """Physical samples of a frozen iterate, linearly interpolated in time."""

    def __init__(self, star: CoupledTrajectory, model, params):
        a, th = star.acoustic, star.thermal
        g = a.grid
        self.grid, self.model, self.params = g, model, params
        self.times = a.times
        self.P = g.to_physical(a.p)
        self.Q = g.to_physical(a.pt)
        self.W = g.to_physical(a.ptt)
        self.TH = g.to_physical(th.theta)
        self.THc = th.theta
        self._cache_t, self._cache = None, None

    def _weights(self, t):
        times = self.times
        if len(times) == 1:
            return 0, 0, 0.0
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        s = (t - times[i]) / (times[i + 1] - times[i])
        return i, i + 1, s

    def at(self, t):
        if t == self._cache_t:
            return self._cache
        i, j, s = self._weights(t)
        lerp = lambda X: (1 - s) * X[i] + s * X[j] if s else X[i].copy()
        th = lerp(self.TH)
        med = eval_medium(self.model, self.params, th)
        self._cache_t = t
        self._cache = (lerp(self.P), lerp(self.Q), lerp(self.W), th, med)
        return self._cache

    def coefficients(self, t):
        *_, med = self.at(t)
        return med.h, med.zeta

    def coefficient_gradients(self, t):
        i, j, s = self._weights(t)
        thc = (1 - s) * self.THc[i] + s * self.THc[j]
        th = self.at(t)[3]
        dh, dzeta, _, _ = eval_medium_slopes(self.model, self.params, th)
        grad = self.grid.gradient_physical(thc)
        return [dh * gi for gi in grad], [dzeta * gi for gi in grad]

    def acoustic_source(self, t):
        p, q, w, _, med = self.at(t)
        return self.grid.to_spectral(2.0 * med.k * (q * q + p * w))

    def thermal_source(self, t):
        _, q, _, _, med = self.at(t)
        return self.grid.to_spectral(med.phi * q * q)


def consistent_p2(data: InitialData, model: CoefficientModel,
                  params: PhysicalParams) -> SpectralField:
    """p_tt(0) from (1 - 2k p0) p2 = h Lap p0 + zeta Lap p1 + 2k p1^2."""
    g = data.grid
    lam = g.eigenvalues
    med = eval_medium(model, params, data.theta0.physical())
    p0, p1 = data.p0.physical(), data.p1.physical()
    num = (med.h * g.to_physical(-lam * data.p0.coeffs)
           + med.zeta * g.to_physical(-lam * data.p1.coeffs) + 2 * med.k * p1 * p1)
    return SpectralField(g, g.to_spectral(num / (1.0 - 2.0 * med.k * p0)))


def resolve_data(data: InitialData, model, params) -> InitialData:
    if data.p2 is not None:
        return data
    return replace(data, p2=consistent_p2(data, model, params))


def _track(frozen: _Frozen, model: CoefficientModel) -> CoefficientTrack:
    return CoefficientTrack(frozen.coefficients, r0=model.h_floor, b0=model.zeta_floor,
                            gradient=frozen.coefficient_gradients)


def apply_T(star: CoupledTrajectory, data: InitialData, model: CoefficientModel,
            params: PhysicalParams, T: float, dt: float) -> CoupledTrajectory:
    """One application of the fixed-point map to the frozen iterate ``star``."""
    data = resolve_data(data, model, params)
    N = jmgt.n_steps(T, dt)
    times = dt * np.arange(N + 1)
    st = star.acoustic.times
    if (st.shape != times.shape or not np.allclose(st, times, rtol=0, atol=1e-9 * dt)
            or star.acoustic.grid != data.grid):
        raise MeshMismatch("frozen iterate does not match the requested mesh/grid")
    frozen = _Frozen(star, model, params)
    track = _track(frozen, model)
    init = AcousticState(0.0, data.p0, data.p1, data.p2)
    acoustic = jmgt.solve(init, track, frozen.acoustic_source, T, dt, params.tau)
    thermal = pennes.solve(data.theta0, frozen.thermal_source, T, dt, params)
    return CoupledTrajectory(acoustic, thermal)


def hold(data: InitialData, model: CoefficientModel, params: PhysicalParams, T: float,
         dt: float) -> CoupledTrajectory:
    """Constant-in-time extension of the data; starts the Picard iteration."""
    data = resolve_data(data, model, params)
    g = data.grid
    N = jmgt.n_steps(T, dt)
    times = dt * np.arange(N + 1)
    rep = lambda c: np.broadcast_to(c, (N + 1,) + g.modes).copy()
    med = eval_medium(model, params, data.theta0.physical())
    g0 = g.to_spectral(med.phi * data.p1.physical() ** 2)
    th1 = pennes.compat_theta1(data.theta0, g0, params)
    acoustic = AcousticTrajectory(g, times, rep(data.p0.coeffs), rep(data.p1.coeffs),
                                  rep(data.p2.coeffs), params.tau)
    thermal = ThermalTrajectory(g, times, rep(data.theta0.coeffs), rep(th1.coeffs), rep(g0))
    return CoupledTrajectory(acoustic, thermal)


# -- Picard loop ----------------------------------------------------------------

@dataclass
class IterationReport:
    n: list = field(default_factory=list)
    ydiff: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    xp1: list = field(default_factory=list)
    xp2: list = field(default_factory=list)
    xtheta2: list = field(default_factory=list)
    margin: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.n)

    def add(self, **row):
        for k, v in row.items():
            getattr(self, k).append(v)

    def write_csv(self, path):
        cols = ["n", "ydiff", "ratio", "xp1", "xp2", "xtheta2", "margin", "accepted"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for i in range(len(self.n)):
                row = []
                for c in cols:
                    v = getattr(self, c)[i]
                    if isinstance(v, bool):
                        row.append(int(v))
                    elif isinstance(v, (int, np.integer)):
                        row.append(int(v))
                    else:
                        row.append(f"{v:.17g}")
                w.writerow(row)


@dataclass
class NonlinearResult:
    solution: CoupledTrajectory
    report: IterationReport
    residuals: dict
    ball: BallSpec
    data: InitialData


def solve_nonlinear(data: InitialData, model: CoefficientModel, params: PhysicalParams,
                    T: float, dt: float, ball: BallSpec = None, tol: float = 1e-8,
                    max_iter: int = 50, eta0: float = None, margin_floor: float = 0.0,
                    check_residual: bool = True) -> NonlinearResult:
    """Picard iteration of ``apply_T`` from the held data.

    Stops once the Y-distance between successive iterates is at most
    ``tol * (1 + ||iterate||_Y)``.  Raises NoContraction after three
    consecutive ratios >= 1, DegeneracyLost when min(1 - 2 k p) drops to
    ``margin_floor``, MaxIterExceeded otherwise.
    """
    data = resolve_data(data, model, params)
    if eta0 is not None:
        size = small_data_norm(data, params.tau)
        if size > eta0:
            raise SmallDataViolation(
                f"initial data norm {size:.6g} exceeds eta0 = {eta0:.6g}")
    if ball is None:
        ball = default_ball(data, params.tau)
    predictor = ball.predictor(model.k_cap, data.grid.dims)

    prev = hold(data, model, params, T, dt)
    report = IterationReport()
    bad = 0
    for n in range(1, max_iter + 1):
        cur = apply_T(prev, data, model, params, T, dt)
        diff = ynorm_diff(cur, prev)
        ratio = diff / report.ydiff[-1] if n >= 2 and report.ydiff[-1] > 0 else (
            0.0 if n >= 2 else float("nan"))
        margin = float(np.min(degeneracy_margin(cur, model, params)))
        xp1, xp2, xt2 = xp1_norm(cur.acoustic), xp2_norm(cur.acoustic), xtheta2_norm(cur.thermal)
        inside = xp1 <= ball.eta and xp2 <= ball.R1 and xt2 <= ball.R2
        report.add(n=n, ydiff=diff, ratio=ratio, xp1=xp1, xp2=xp2, xtheta2=xt2,
                   margin=margin, accepted=bool(inside and margin > 0))
        log.info("picard n=%d ydiff=%.3e ratio=%.3e margin=%.6f", n, diff, ratio, margin)
        if margin <= margin_floor:
            raise DegeneracyLost(f"iteration {n}: min(1 - 2k p) = {margin:.6g}")
        if n >= 2 and ratio >= 1:
            bad += 1
            if bad >= 3:
                raise NoContraction(f"contraction ratio >= 1 for 3 iterations (n={n})")
        else:
            bad = 0
        prev = cur
        if diff <= tol * (1.0 + ynorm(cur)):
            report.converged = True
            break
    else:
        raise MaxIterExceeded(f"no convergence in {max_iter} iterations")

    residuals = {}
    if check_residual:
        residuals = residual_shifted(prev, model, params)
    residuals["degeneracy_predictor"] = predictor
    return NonlinearResult(prev, report, residuals, ball, data)


# -- independent residual of the shifted system ------------------------------------

def residual_shifted(x: CoupledTrajectory, model: CoefficientModel,
                     params: PhysicalParams) -> dict:
    """Galerkin residuals of the shifted nonlinear system on the stored mesh.

    Both equations are evaluated at the half steps: third/first time
    derivatives by centred differences of the stored p_tt/Theta, every other
    term from the averaged end states.  Pointwise residuals are projected onto
    the resolved modes and measured in L2(0,T; L2).  Relative values divide by
    the L2L2 norm of the stacked individual terms.
    """
    a, th = x.acoustic, x.thermal
    if th.times.shape != a.times.shape or not np.allclose(th.times, a.times):
        raise MeshMismatch("acoustic and thermal meshes differ")
    g = a.grid
    t = a.times
    if len(t) < 2:
        return {"acoustic": 0.0, "thermal": 0.0, "acoustic_rel": 0.0, "thermal_rel": 0.0,
                "kinematic_rel": 0.0}
    dt = np.diff(t)
    lam = g.eigenvalues
    mid = lambda A: 0.5 * (A[1:] + A[:-1])
    ddt = lambda A: np.diff(A, axis=0) / dt.reshape((-1,) + (1,) * g.dims)
    phys = g.to_physical
    proj = g.to_spectral

    p, q, w, T_ = (phys(mid(v)) for v in (a.p, a.pt, a.ptt, th.theta))
    lap_p, lap_q, lap_T = phys(-lam * mid(a.p)), phys(-lam * mid(a.pt)), phys(-lam * mid(th.theta))
    med = eval_medium(model, params, T_)

    ac_terms = [params.tau * ddt(a.ptt), proj((1 - 2 * med.k * p) * w), -proj(med.h * lap_p),
                -proj(med.zeta * lap_q), -proj(2 * med.k * q * q)]
    th_terms = [params.m * ddt(th.theta), -proj(params.kappa_a * lap_T),
                params.ell * mid(th.theta), -proj(med.phi * q * q)]
    kin_terms = [ddt(a.p) - mid(a.pt), ddt(a.pt) - mid(a.ptt)]

    def l2l2(c):
        return float(np.sqrt(np.sum(dt * hnorm2(g, c, 0))))

    def rel(terms):
        res = l2l2(sum(terms))
        scale = float(np.sqrt(sum(l2l2(v) ** 2 for v in terms)))
        return res, (res / scale if scale > 0 else 0.0)

    ra, ra_rel = rel(ac_terms)
    rt, rt_rel = rel(th_terms)
    kin = sum(l2l2(v) for v in kin_terms)
    kin_scale = l2l2(mid(a.pt)) + l2l2(mid(a.ptt))
    return {
        "acoustic": ra,
        "acoustic_rel": ra_rel,
        "thermal": rt,
        "thermal_rel": rt_rel,
        "kinematic_rel": kin / kin_scale if kin_scale > 0 else 0.0,
    }
