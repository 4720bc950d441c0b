"""Implicit-midpoint integrator for the variable-coefficient linear JMGT equation

    tau p_ttt + p_tt - r(x,t) Lap p - b(x,t) Lap p_t = f(x,t)

recast as the first-order system U = (p, p_t, p_tt).  Eliminating p and p_t
from the midpoint stage leaves one equation for the stage value of p_tt,

    (1 + 2 tau/dt) w - (r dt^2/4 + b dt/2) Lap w = rhs,

which is diagonal in the sine basis when r and b do not depend on x.  With
``tau == 0`` (Westervelt limit) the state is (p, p_t) and p_tt is recovered
from the equation at each node.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import CoefficientFloorViolated, GridMismatch, NonFiniteState, SolveDiverged
from .spectral import BoxGrid, SpectralField, hnorm2

log = logging.getLogger(__name__)

SOLVE_RTOL = 1e-10
SOLVE_MAXITER = 500


@dataclass
class AcousticState:
    t: float
    p: SpectralField
    pt: SpectralField
    ptt: SpectralField

    def __post_init__(self):
        g = self.p.grid
        if self.pt.grid != g or self.ptt.grid != g:
            raise GridMismatch("p, pt, ptt must share one grid")

    @property
    def grid(self) -> BoxGrid:
        return self.p.grid

    def is_finite(self) -> bool:
        return all(np.isfinite(v) for v in (self.p.norm(2), self.pt.norm(2), self.ptt.norm(1)))


class CoefficientTrack:
    """Time-dependent coefficients (r, b) with floors and optional caps.

    ``sampler(t)`` returns ``(r, b)``: floats when the coefficients are
    constant in x, otherwise arrays of physical samples on the grid.
    ``gradient(t)``, if given, returns ``(grad_r, grad_b)`` as lists of
    per-axis physical arrays.
    """

    def __init__(self, sampler, r0=0.0, b0=0.0, r1=np.inf, b1=np.inf, gradient=None):
        self.sampler = sampler
        self.r0, self.b0, self.r1, self.b1 = r0, b0, r1, b1
        self.gradient = gradient

    @classmethod
    def constant(cls, r: float, b: float):
        return cls(lambda t: (float(r), float(b)), r0=r, b0=b, r1=r, b1=b,
                   gradient=lambda t: (0.0, 0.0))

    def sample(self, t):
        r, b = self.sampler(t)
        # tiny tolerance so floors certified from the same samples do not trip
        slack = 1e-12
        if (np.min(r) < self.r0 * (1 - slack) or np.max(r) > self.r1 * (1 + slack)
                or np.min(b) < self.b0 * (1 - slack) or np.max(b) > self.b1 * (1 + slack)):
            raise CoefficientFloorViolated(
                f"t={t:.6g}: r in [{np.min(r):.6g}, {np.max(r):.6g}], "
                f"b in [{np.min(b):.6g}, {np.max(b):.6g}] leave "
                f"[{self.r0:.6g}, {self.r1:.6g}] x [{self.b0:.6g}, {self.b1:.6g}]")
        return r, b

    def is_x_constant(self, t=0.0) -> bool:
        r, b = self.sampler(t)
        return np.ndim(r) == 0 and np.ndim(b) == 0


Source = Optional[Callable[[float], np.ndarray]]


@dataclass
class AcousticTrajectory:
    grid: BoxGrid
    times: np.ndarray
    p: np.ndarray
    pt: np.ndarray
    ptt: np.ndarray
    tau: float

    def __len__(self):
        return len(self.times)

    def state(self, i) -> AcousticState:
        g = self.grid
        return AcousticState(float(self.times[i]), SpectralField(g, self.p[i]),
                             SpectralField(g, self.pt[i]), SpectralField(g, self.ptt[i]))

    @property
    def final(self) -> AcousticState:
        return self.state(-1)

    def norm_table(self) -> np.ndarray:
        """Columns t, ||p||_H2, ||p_t||_H2, ||p_tt||_H1."""
        g = self.grid
        return np.column_stack([
            self.times,
            np.sqrt(hnorm2(g, self.p, 2)),
            np.sqrt(hnorm2(g, self.pt, 2)),
            np.sqrt(hnorm2(g, self.ptt, 1)),
        ])


def _coeffs(f, t, grid):
    if f is None:
        return None
    v = f(t)
    if isinstance(v, SpectralField):
        return v.coeffs
    return None if v is None else np.asarray(v, dtype=float)


def _product(grid, a, coeffs):
    if np.ndim(a) == 0:
        return a * coeffs
    return grid.to_spectral(a * grid.to_physical(coeffs))


def _stage_solve(grid, a0, c, rhs, lam):
    """Solve a0 x + P[c * phys(lam x)] = rhs for x.

    Preconditioned Richardson with the diagonal a0 + cbar*lam, cbar the
    midrange of c; the iteration contracts at roughly
    (cmax - cmin) / (cmax + cmin).
    """
    if np.ndim(c) == 0:
        return rhs / (a0 + c * lam)
    cmin, cmax = float(np.min(c)), float(np.max(c))
    diag = a0 + 0.5 * (cmin + cmax) * lam
    x = rhs / diag
    scale = np.linalg.norm(rhs)
    if scale == 0.0:
        return x
    best, stall = np.inf, 0
    for it in range(SOLVE_MAXITER):
        res = rhs - a0 * x - grid.to_spectral(c * grid.to_physical(lam * x))
        rn = np.linalg.norm(res) / scale
        if rn <= SOLVE_RTOL:
            return x
        if not np.isfinite(rn):
            break
        if rn < 0.9 * best:
            best, stall = rn, 0
        else:
            stall += 1
            if stall >= 20:
                break
        x = x + res / diag
    raise SolveDiverged(f"stage solve stalled at relative residual {rn:.3e} after {it + 1} its")


def _advance(grid, lam, tau, dt, t, p, q, w, track, f):
    """One midpoint step on raw coefficient arrays."""
    h = 0.5 * dt
    tm = t + h
    r, b = track.sample(tm)
    fm = _coeffs(f, tm, grid)
    fm = 0.0 if fm is None else fm
    if tau > 0:
        a0 = 1.0 + 2.0 * tau / dt
        rhs = ((2.0 * tau / dt) * w + fm
               - _product(grid, r, lam * (p + h * q)) - _product(grid, b, lam * q))
        wb = _stage_solve(grid, a0, r * h * h + b * h, rhs, lam)
        qb = q + h * wb
        pb = p + h * qb
        return 2 * pb - p, 2 * qb - q, 2 * wb - w
    a0 = 2.0 / dt
    rhs = a0 * q - _product(grid, r, lam * p) + fm
    qb = _stage_solve(grid, a0, r * h + b, rhs, lam)
    pb = p + h * qb
    p1, q1 = 2 * pb - p, 2 * qb - q
    return p1, q1, westervelt_ptt(grid, p1, q1, t + dt, track, f)


def westervelt_ptt(grid, p, q, t, track, f):
    """p_tt = r Lap p + b Lap p_t + f at time t (tau = 0 closure)."""
    lam = grid.eigenvalues
    r, b = track.sample(t)
    fe = _coeffs(f, t, grid)
    out = -_product(grid, r, lam * p) - _product(grid, b, lam * q)
    return out if fe is None else out + fe


def consistent_ptt(p0: SpectralField, p1: SpectralField, track: CoefficientTrack,
                   f: Source = None, t0: float = 0.0) -> SpectralField:
    """Initial p_tt balancing the second-order part of the equation at t0."""
    g = p0.grid
    return SpectralField(g, westervelt_ptt(g, p0.coeffs, p1.coeffs, t0, track, f))


def step(state: AcousticState, track: CoefficientTrack, f: Source, dt: float,
         tau: float) -> AcousticState:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    g = state.grid
    p, q, w = _advance(g, g.eigenvalues, tau, dt, state.t, state.p.coeffs,
                       state.pt.coeffs, state.ptt.coeffs, track, f)
    out = AcousticState(state.t + dt, SpectralField(g, p), SpectralField(g, q),
                        SpectralField(g, w))
    if not out.is_finite():
        raise NonFiniteState(f"non-finite acoustic state at t={out.t:.6g}")
    return out


def n_steps(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 0 or (n > 0 and abs(n * dt - T) > 1e-9 * max(T, dt)):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return n


def solve(initial: AcousticState, track: CoefficientTrack, f: Source, T: float, dt: float,
          tau: float, stride: int = 1, callback=None) -> AcousticTrajectory:
    """March from ``initial`` over [t0, t0 + T] with uniform ``dt``.

    Every ``stride``-th state is stored (the final state always is) and passed
    to ``callback(state)`` if given.
    """
    g = initial.grid
    N = n_steps(T, dt)
    t0 = initial.t
    K = int(np.prod(g.modes))
    times = t0 + dt * np.arange(N + 1)
    P = np.empty((N + 1,) + g.modes)
    Q = np.empty_like(P)
    W = np.empty_like(P)
    P[0], Q[0], W[0] = initial.p.coeffs, initial.pt.coeffs, initial.ptt.coeffs

    if N > 0 and track.is_x_constant(t0):
        mids = times[:-1] + 0.5 * dt
        rb = np.array([track.sample(t) for t in mids], dtype=float)
        fm = [_coeffs(f, t, g) for t in mids]
        has_f = f is not None and any(v is not None for v in fm)
        f_mid = (np.array([np.zeros(g.modes) if v is None else v for v in fm]).reshape(N, K)
                 if has_f else np.zeros((0, 0)))
        if tau > 0:
            rb_end, f_end = np.zeros((N, 2)), np.zeros((0, 0))
        else:
            rb_end = np.array([track.sample(t) for t in times[1:]], dtype=float)
            fe = [_coeffs(f, t, g) for t in times[1:]]
            f_end = (np.array([np.zeros(g.modes) if v is None else v for v in fe]).reshape(N, K)
                     if has_f else np.zeros((0, 0)))
        Pf, Qf, Wf = (a.reshape(N + 1, K) for a in (P, Q, W))
        kernels.midpoint_march_diag(
            np.ascontiguousarray(g.eigenvalues.ravel()), float(tau), float(dt),
            np.ascontiguousarray(rb[:, 0]), np.ascontiguousarray(rb[:, 1]), f_mid,
            np.ascontiguousarray(rb_end[:, 0]), np.ascontiguousarray(rb_end[:, 1]), f_end,
            Pf, Qf, Wf)
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Q)) and np.all(np.isfinite(W))):
            raise NonFiniteState("non-finite acoustic state")
    else:
        lam = g.eigenvalues
        for n in range(N):
            P[n + 1], Q[n + 1], W[n + 1] = _advance(g, lam, tau, dt, times[n], P[n], Q[n],
                                                     W[n], track, f)
            if not np.all(np.isfinite(W[n + 1])) or not np.all(np.isfinite(P[n + 1])):
                raise NonFiniteState(f"non-finite acoustic state at t={times[n + 1]:.6g}")

    keep = np.arange(0, N + 1, max(int(stride), 1))
    if keep[-1] != N:
        keep = np.append(keep, N)
    traj = AcousticTrajectory(g, times[keep], P[keep], Q[keep], W[keep], tau)
    if callback is not None:
        for i in range(len(keep)):
            callback(traj.state(i))
    return traj
