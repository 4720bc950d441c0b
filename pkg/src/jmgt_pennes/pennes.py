"""Linear Pennes equation  m Theta_t - kappa_a Lap Theta + ell Theta = g.

The operator is diagonal in the sine basis, so each mode is advanced with its
exact integrating factor.  The source is frozen at the step midpoint and
integrated exactly against the exponential.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import GridMismatch, NonFiniteState
from .jmgt import n_steps
from .model import PhysicalParams
from .spectral import BoxGrid, SpectralField, hnorm2


@dataclass
class ThermalState:
    t: float
    theta: SpectralField
    theta_t: SpectralField

    def __post_init__(self):
        if self.theta.grid != self.theta_t.grid:
            raise GridMismatch("theta and theta_t must share one grid")


@dataclass
class ThermalTrajectory:
    grid: BoxGrid
    times: np.ndarray
    theta: np.ndarray
    theta_t: np.ndarray
    g: np.ndarray = None  # source coefficients at the stored times

    def state(self, i) -> ThermalState:
        return ThermalState(float(self.times[i]), SpectralField(self.grid, self.theta[i]),
                            SpectralField(self.grid, self.theta_t[i]))

    @property
    def final(self) -> ThermalState:
        return self.state(-1)

    def theta_tt(self, params: PhysicalParams) -> np.ndarray:
        """Theta_tt from the time-differentiated equation; g_t by differences."""
        lam = self.grid.eigenvalues
        g = np.zeros_like(self.theta) if self.g is None else self.g
        gt = (np.gradient(g, self.times, axis=0, edge_order=2)
              if len(self.times) > 2 else np.zeros_like(g))
        return (-(params.kappa_a * lam + params.ell) * self.theta_t + gt) / params.m

    def norm_table(self, params: PhysicalParams) -> np.ndarray:
        """Columns t, ||Theta||_H2, ||Theta||_H3, ||Theta_t||_H1, then the
        running integrals of ||Theta||_H3^2, ||Theta_t||_H2^2, ||Theta_tt||^2."""
        g = self.grid
        h3 = hnorm2(g, self.theta, 3)
        t_h2 = hnorm2(g, self.theta_t, 2)
        tt = hnorm2(g, self.theta_tt(params), 0)
        return np.column_stack([
            self.times,
            np.sqrt(hnorm2(g, self.theta, 2)),
            np.sqrt(h3),
            np.sqrt(hnorm2(g, self.theta_t, 1)),
            _cumtrapz(h3, self.times),
            _cumtrapz(t_h2, self.times),
            _cumtrapz(tt, self.times),
        ])


def _cumtrapz(y, t):
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def decay_rates(grid: BoxGrid, params: PhysicalParams) -> np.ndarray:
    """mu_k = (kappa_a lambda_k + ell) / m."""
    return (params.kappa_a * grid.eigenvalues + params.ell) / params.m


def _g(g, t, grid):
    if g is None:
        return np.zeros(grid.modes)
    v = g(t)
    if v is None:
        return np.zeros(grid.modes)
    return v.coeffs if isinstance(v, SpectralField) else np.asarray(v, dtype=float)


def compat_theta1(theta0: SpectralField, g0, params: PhysicalParams) -> SpectralField:
    """Theta_t(0) = (kappa_a Lap Theta0 - ell Theta0 + g(0)) / m."""
    g0c = np.zeros(theta0.grid.modes) if g0 is None else (
        g0.coeffs if isinstance(g0, SpectralField) else np.asarray(g0, dtype=float))
    lam = theta0.grid.eigenvalues
    return SpectralField(
        theta0.grid, (-(params.kappa_a * lam + params.ell) * theta0.coeffs + g0c) / params.m)


def _factors(grid, params, dt):
    mu = decay_rates(grid, params)
    return np.exp(-mu * dt), -np.expm1(-mu * dt) / (params.m * mu)


def step(state: ThermalState, g, dt: float, params: PhysicalParams) -> ThermalState:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    grid = state.theta.grid
    decay, gain = _factors(grid, params, dt)
    th = decay * state.theta.coeffs + gain * _g(g, state.t + 0.5 * dt, grid)
    out = ThermalState(state.t + dt, SpectralField(grid, th),
                       compat_theta1(SpectralField(grid, th), _g(g, state.t + dt, grid), params))
    if not np.all(np.isfinite(th)):
        raise NonFiniteState(f"non-finite thermal state at t={out.t:.6g}")
    return out


def solve(theta0: SpectralField, g, T: float, dt: float, params: PhysicalParams,
          t0: float = 0.0, stride: int = 1) -> ThermalTrajectory:
    """Integrate from ``theta0`` at ``t0``; g(t) returns source coefficients."""
    grid = theta0.grid
    N = n_steps(T, dt)
    K = int(np.prod(grid.modes))
    times = t0 + dt * np.arange(N + 1)
    g_nodes = np.array([_g(g, t, grid) for t in times])
    th = np.empty((N + 1, K))
    th[0] = theta0.coeffs.ravel()
    if N > 0:
        decay, gain = _factors(grid, params, dt)
        g_mid = np.array([_g(g, t, grid).ravel() for t in times[:-1] + 0.5 * dt])
        kernels.exp_march(decay.ravel().copy(), gain.ravel().copy(), g_mid, th)
    if not np.all(np.isfinite(th)):
        raise NonFiniteState("non-finite thermal state")
    th = th.reshape((N + 1,) + grid.modes)
    lam = grid.eigenvalues
    th_t = (-(params.kappa_a * lam + params.ell) * th + g_nodes) / params.m
    keep = np.arange(0, N + 1, max(int(stride), 1))
    if keep[-1] != N:
        keep = np.append(keep, N)
    return ThermalTrajectory(grid, times[keep], th[keep], th_t[keep], g_nodes[keep])


def regularity_report(traj: ThermalTrajectory, params: PhysicalParams) -> dict:
    """Left and right sides of the parabolic H^2 regularity estimate.

    Norms are the inhomogeneous ones (all orders up to s summed).  The source
    terms use the stored g samples with trapezoid time integrals.
    """
    grid, t = traj.grid, traj.times
    integ = lambda y: float(np.trapezoid(y, t)) if len(t) > 1 else 0.0
    g = np.zeros_like(traj.theta) if traj.g is None else traj.g
    gt = (np.gradient(g, t, axis=0, edge_order=2) if len(t) > 2 else np.zeros_like(g))
    lhs = {
        "theta_L2H3": integ(hnorm2(grid, traj.theta, 3, True)),
        "theta_LinfH2": float(np.max(hnorm2(grid, traj.theta, 2, True))),
        "theta_t_LinfH1": float(np.max(hnorm2(grid, traj.theta_t, 1, True))),
        "theta_t_L2H2": integ(hnorm2(grid, traj.theta_t, 2, True)),
        "theta_tt_L2L2": integ(hnorm2(grid, traj.theta_tt(params), 0)),
    }
    rhs = {
        "theta0_H3": float(hnorm2(grid, traj.theta[0], 3, True)),
        "grad_g0": float(hnorm2(grid, g[0], 1)),
        "g_H1L2": integ(hnorm2(grid, g, 0) + hnorm2(grid, gt, 0)),
        "g_L2H1": integ(hnorm2(grid, g, 1, True)),
    }
    return {"lhs": lhs, "rhs": rhs, "lhs_total": sum(lhs.values()),
            "rhs_total": sum(rhs.values())}
