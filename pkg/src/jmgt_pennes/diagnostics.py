"""Energy functionals, coefficient monitors and Gronwall envelopes.

Conventions follow the linear JMGT analysis:

    E0 = (||p_t||^2 + ||sqrt(r) grad p||^2) / 2
    E1 = (tau ||p_tt||^2 + ||sqrt(b) grad p_t||^2) / 2
    E  = (||sqrt(b) Lap p||^2 + ||sqrt(b) Lap p_t||^2 + tau ||grad p_tt||^2) / 2
    D0 = ||sqrt(b) grad p_t||^2 + ||p_tt||^2
    D  = ||sqrt(r) Lap p||^2 + ||grad p_tt||^2
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import NegativeA, NegativeWeight
from .jmgt import AcousticState, AcousticTrajectory, CoefficientTrack, _coeffs
from .spectral import BoxGrid, hnorm2


class EnergySnapshot(NamedTuple):
    t: float
    E0: float
    E1: float
    E: float
    D0: float
    D: float


@dataclass
class EnergyReport:
    """Time series of energies and monitors, one entry per sampled time."""

    t: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    E: np.ndarray
    D0: np.ndarray
    D: np.ndarray
    Lambda0: np.ndarray
    Lambda: np.ndarray
    chi_min: np.ndarray = field(default=None)
    degeneracy_margin: np.ndarray = field(default=None)

    def columns(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = np.full(len(self.t), np.nan) if v is None else np.asarray(v)
        return out

    def write_csv(self, path):
        cols = self.columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(cols))
            for row in zip(*cols.values()):
                w.writerow([f"{v:.17g}" for v in row])


def _weighted(grid: BoxGrid, a, phys_sq):
    """Integral of a * phys_sq over the box by the grid quadrature."""
    return float(np.sum(grid.weights * a * phys_sq))


def _check_weight(name, a):
    if np.min(a) < 0:
        raise NegativeWeight(f"{name} is negative somewhere ({np.min(a):.6g})")


def energies(state: AcousticState, r, b, tau: float) -> EnergySnapshot:
    """Energies and dissipations of one snapshot for coefficients r, b.

    Scalar coefficients use the exact Parseval sums; sampled coefficients use
    the grid quadrature with gradients and Laplacians synthesised spectrally.
    """
    _check_weight("r", r)
    _check_weight("b", b)
    g = state.grid
    p, q, w = state.p.coeffs, state.pt.coeffs, state.ptt.coeffs
    lam = g.eigenvalues
    q_l2 = float(hnorm2(g, q, 0))
    w_l2 = float(hnorm2(g, w, 0))
    w_h1 = float(hnorm2(g, w, 1))

    def grad_sq(a, c):
        if np.ndim(a) == 0:
            return float(a) * float(hnorm2(g, c, 1))
        return _weighted(g, a, sum(d * d for d in g.gradient_physical(c)))

    def lap_sq(a, c):
        if np.ndim(a) == 0:
            return float(a) * float(hnorm2(g, c, 2))
        return _weighted(g, a, g.to_physical(lam * c) ** 2)

    r_gp, b_gq = grad_sq(r, p), grad_sq(b, q)
    E0 = 0.5 * (q_l2 + r_gp)
    E1 = 0.5 * (tau * w_l2 + b_gq)
    E = 0.5 * (lap_sq(b, p) + lap_sq(b, q) + tau * w_h1)
    D0 = b_gq + w_l2
    D = lap_sq(r, p) + w_h1
    return EnergySnapshot(state.t, E0, E1, E, D0, D)


def _sup(a):
    return float(np.max(np.abs(a)))


def _time_slopes(track: CoefficientTrack, t, delta, t_range):
    lo, hi = (-np.inf, np.inf) if t_range is None else t_range
    ta, tb = max(t - delta, lo), min(t + delta, hi)
    if tb <= ta:
        return 0.0, 0.0
    ra, ba = track.sampler(ta)
    rb, bb = track.sampler(tb)
    span = tb - ta
    return (np.asarray(rb) - ra) / span, (np.asarray(bb) - ba) / span


def _grad_sup(grid, track, t):
    if track.gradient is not None:
        gr, gb = track.gradient(t)
    else:
        r, b = track.sampler(t)
        gr = gb = 0.0
        if np.ndim(r):
            gr = np.gradient(r, *grid.axes, edge_order=2)
        if np.ndim(b):
            gb = np.gradient(b, *grid.axes, edge_order=2)

    def mag(gv):
        if np.ndim(gv) == 0 and not isinstance(gv, (list, tuple)):
            return abs(float(gv))
        gv = gv if isinstance(gv, (list, tuple)) else [gv]
        return float(np.sqrt(np.max(sum(np.asarray(c) ** 2 for c in gv))))

    return mag(gr), mag(gb)


def lambda0(track: CoefficientTrack, t: float, delta: float, grid: BoxGrid = None,
            t_range=None) -> float:
    """1 + |r_t| + |r_t|^2 + |b_t| + |grad b|^2 + |grad r|^2 (sup norms).

    Time derivatives are centred differences of step ``delta``, one-sided at
    the ends of ``t_range``.  Gradients come from ``track.gradient`` or, when
    the track has none, second-order differences on the grid.
    """
    rt, bt = _time_slopes(track, t, delta, t_range)
    grad_r, grad_b = _grad_sup(grid, track, t)
    srt = _sup(rt)
    return 1.0 + srt + srt**2 + _sup(bt) + grad_b**2 + grad_r**2


def lambda_(track: CoefficientTrack, t: float, delta: float, t_range=None) -> float:
    """1 + |b_t| + |b_t|^2 + |r_t|^2 (sup norms)."""
    rt, bt = _time_slopes(track, t, delta, t_range)
    sbt = _sup(bt)
    return 1.0 + sbt + sbt**2 + _sup(rt) ** 2


def gronwall_envelope(u0: float, a, b, mesh) -> np.ndarray:
    """u0 exp(A(t)) + int_0^t b(s) exp(A(t) - A(s)) ds with A = int a.

    ``a`` and ``b`` are arrays on ``mesh`` or callables of time; integrals use
    the trapezoid rule step by step.
    """
    mesh = np.asarray(mesh, dtype=float)
    a = np.asarray([a(t) for t in mesh] if callable(a) else a, dtype=float)
    b = np.asarray([b(t) for t in mesh] if callable(b) else b, dtype=float)
    if np.any(a < 0):
        raise NegativeA("the Gronwall rate a must be nonnegative")
    out = np.empty(len(mesh))
    kernels.gronwall_recurrence(float(u0), mesh, np.ascontiguousarray(a),
                                np.ascontiguousarray(b), out)
    return out


def energy_report(traj: AcousticTrajectory, track: CoefficientTrack, f=None,
                  delta: float = None) -> EnergyReport:
    """Energies and Lambda monitors along a stored linear trajectory."""
    t = traj.times
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    delta = dt if delta is None else delta
    rng = (float(t[0]), float(t[-1]))
    rows, L0, L = [], [], []
    for i in range(len(t)):
        r, b = track.sampler(t[i])
        rows.append(energies(traj.state(i), r, b, traj.tau))
        L0.append(lambda0(track, t[i], delta, traj.grid, rng))
        L.append(lambda_(track, t[i], delta, rng))
    arr = np.array([row[1:] for row in rows]).T
    return EnergyReport(t.copy(), *arr, np.array(L0), np.array(L))


def forcing_norms(traj: AcousticTrajectory, f) -> tuple:
    """F0 = ||f||^2 and F = ||f||^2 + ||grad f||^2 at the stored times."""
    g = traj.grid
    F0, F = np.zeros(len(traj.times)), np.zeros(len(traj.times))
    if f is not None:
        for i, t in enumerate(traj.times):
            c = _coeffs(f, t, g)
            if c is not None:
                F0[i] = hnorm2(g, c, 0)
                F[i] = F0[i] + hnorm2(g, c, 1)
    return F0, F


@dataclass
class EnvelopeAudit:
    t: np.ndarray
    lower: np.ndarray      # E0 + E1 + int D0
    lower_env: np.ndarray
    higher: np.ndarray     # E + int D
    higher_env: np.ndarray

    def ratios(self):
        """Max over time of measured/envelope for the two estimates."""
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(self.lower_env > 0, self.lower / self.lower_env, 0.0)
            b = np.where(self.higher_env > 0, self.higher / self.higher_env, 0.0)
        return float(np.max(a)), float(np.max(b))

    def write_csv(self, path, C_lower=1.0, C_higher=1.0):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "E0_E1_intD0", "envelope_lower", "E_intD", "envelope_higher"])
            for row in zip(self.t, self.lower, C_lower * self.lower_env, self.higher,
                           C_higher * self.higher_env):
                w.writerow([f"{v:.17g}" for v in row])


def envelope_audit(report: EnergyReport, F0, F) -> EnvelopeAudit:
    """Measured energy sums against the unit-constant Gronwall envelopes."""
    t = report.t
    int_D0 = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (report.D0[1:] + report.D0[:-1]))])
    int_D = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (report.D[1:] + report.D[:-1]))])
    lower = report.E0 + report.E1 + int_D0
    higher = report.E + int_D
    env0 = gronwall_envelope(report.E0[0] + report.E1[0], report.Lambda0, F0, t)
    env = gronwall_envelope(report.E[0], report.Lambda, F, t)
    return EnvelopeAudit(t, lower, env0, higher, env)


def energy_flux_residual(traj: AcousticTrajectory, r: float, b: float) -> np.ndarray:
    """Discrete residual of the combined energy identity for f = 0, constant r, b.

        d/dt [E0 + E1 + tau (p_tt, p_t) + r (grad p, grad p_t)]
            = -D0 + tau ||p_tt||^2 + r ||grad p_t||^2

    Left side by differences over each step, right side at the step-mean
    state.  Implicit midpoint preserves this quadratic identity exactly, so
    the residual is round-off for it and O(dt^2) for other consistent schemes.
    """
    g, tau = traj.grid, traj.tau
    lam = g.eigenvalues
    ax = tuple(range(-g.dims, 0))
    p, q, w = traj.p, traj.pt, traj.ptt
    E0 = 0.5 * (hnorm2(g, q, 0) + r * hnorm2(g, p, 1))
    E1 = 0.5 * (tau * hnorm2(g, w, 0) + b * hnorm2(g, q, 1))
    cross = tau * np.sum(w * q, axis=ax) + r * np.sum(lam * p * q, axis=ax)
    lhs = E0 + E1 + cross
    qm, wm = 0.5 * (q[1:] + q[:-1]), 0.5 * (w[1:] + w[:-1])
    rhs = (-(b * hnorm2(g, qm, 1) + hnorm2(g, wm, 0)) + tau * hnorm2(g, wm, 0)
           + r * hnorm2(g, qm, 1))
    return np.diff(lhs) / np.diff(traj.times) - rhs
