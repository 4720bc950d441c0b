"""Closed-form reference solutions used by the verification suite.

Nothing here calls the time steppers.
"""
from __future__ import annotations

import numpy as np


def mgt_roots(tau: float, lam: float, r: float, b: float) -> np.ndarray:
    """Roots of tau s^3 + s^2 + b lam s + r lam = 0, slowest-decaying first."""
    roots = np.roots([tau, 1.0, b * lam, r * lam])
    return roots[np.argsort(-roots.real)]


def mgt_mode(tau, lam, r, b, p0, p1, p2, t):
    """Single-mode solution (p, p_t, p_tt) at times ``t``.

    Superposition of exp(s_j t) over the cubic's roots with amplitudes from
    the Vandermonde system matching (p0, p1, p2).  Assumes distinct roots.
    """
    s = mgt_roots(tau, lam, r, b)
    V = np.vander(s, 3, increasing=True).T
    c = np.linalg.solve(V, np.array([p0, p1, p2], dtype=complex))
    t = np.asarray(t, dtype=float)
    e = np.exp(np.multiply.outer(t, s)) * c
    return (e.sum(-1).real, (e * s).sum(-1).real, (e * s * s).sum(-1).real)


def mode_decay(kappa_a, lam, ell, m, t):
    """Free Pennes decay factor exp(-(kappa_a lam + ell) t / m)."""
    return np.exp(-(kappa_a * lam + ell) * np.asarray(t) / m)


class ManufacturedMGT:
    """p*(x, t) = sin(pi x) cos(w t) on (0, 1) with r(t) = r0 (1 + t), b const.

    The forcing, worked out by hand, is

        f = sin(pi x) [ tau w^3 sin(w t) - w^2 cos(w t)
                        + r(t) pi^2 cos(w t) - b pi^2 w sin(w t) ].
    """

    def __init__(self, tau, r0, b, w):
        self.tau, self.r0, self.b, self.w = tau, r0, b, w

    def r(self, t):
        return self.r0 * (1.0 + t)

    def amplitude(self, t):
        """Time factor of p* multiplying sin(pi x)."""
        w = self.w
        return np.cos(w * t), -w * np.sin(w * t), -w * w * np.cos(w * t)

    def forcing(self, t):
        w, tau, b = self.w, self.tau, self.b
        return (tau * w**3 * np.sin(w * t) - w * w * np.cos(w * t)
                + self.r(t) * np.pi**2 * np.cos(w * t) - b * np.pi**2 * w * np.sin(w * t))

    # sin(pi x) = phi_1 / sqrt(2) on the unit interval
    coefficient = 1.0 / np.sqrt(2.0)
