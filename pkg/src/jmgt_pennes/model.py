"""Physical parameters and temperature-dependent medium laws.

All laws are written in the shifted temperature ``theta = Theta - Theta_a``.
The speed of sound is a polynomial in ``theta``; every other medium function
(h, beta, zeta, k, phi) is derived from one evaluation of it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConfigError, NonPositiveSpeed, RangeViolation, RangeWarning

CERTIFY_SAMPLES = 4097


@dataclass(frozen=True)
class PhysicalParams:
    tau: float = 1e-6
    rho: float = 1000.0
    beta_acous: float = 6.0
    alpha: float = 5.0
    omega: float = 2 * np.pi * 1e6
    rho_a: float = 1050.0
    C_a: float = 3600.0
    kappa_a: float = 0.5
    rho_b: float = 1050.0
    C_b: float = 3617.0
    W: float = 0.008
    theta_a: float = 37.0
    # tau == 0 selects the Westervelt limit and must be asked for explicitly
    westervelt: bool = False

    def __post_init__(self):
        if self.westervelt:
            if self.tau != 0.0:
                raise ConfigError("physics.tau", "must be 0 when westervelt is set")
        elif not self.tau > 0:
            raise ConfigError("physics.tau", f"must be > 0, got {self.tau}")
        if not self.rho > 0:
            raise ConfigError("physics.rho", f"must be > 0, got {self.rho}")
        if not self.rho_a * self.C_a > 0:
            raise ConfigError("physics.rho_a", "rho_a * C_a must be > 0")
        if not self.kappa_a > 0:
            raise ConfigError("physics.kappa_a", f"must be > 0, got {self.kappa_a}")
        if self.rho_b * self.C_b * self.W < 0:
            raise ConfigError("physics.W", "rho_b * C_b * W must be >= 0")
        if self.alpha < 0:
            raise ConfigError("physics.alpha", f"must be >= 0, got {self.alpha}")
        if not self.omega > 0:
            raise ConfigError("physics.omega", f"must be > 0, got {self.omega}")

    @property
    def m(self) -> float:
        """Volumetric heat capacity rho_a * C_a."""
        return self.rho_a * self.C_a

    @property
    def ell(self) -> float:
        """Perfusion loss coefficient rho_b * C_b * W."""
        return self.rho_b * self.C_b * self.W


class Medium(NamedTuple):
    h: np.ndarray
    beta: np.ndarray
    zeta: np.ndarray
    k: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True)
class CoefficientModel:
    """Speed-of-sound polynomial plus floors/caps certified on ``theta_range``.

    Build with :meth:`certify`; the bound fields are filled by dense sampling
    of the range, padded by a Lipschitz bound over half the sample spacing.
    """

    c_poly: tuple
    params: PhysicalParams
    theta_range: tuple = (-20.0, 60.0)
    h_floor: float = field(default=0.0)
    zeta_floor: float = field(default=0.0)
    k_cap: float = field(default=0.0)
    phi_cap: float = field(default=0.0)

    @classmethod
    def certify(cls, c_poly, params: PhysicalParams, theta_range=(-20.0, 60.0)):
        c_poly = tuple(float(a) for a in c_poly)
        if not 1 <= len(c_poly) <= 5:
            raise ConfigError("medium.c_poly", "polynomial degree must be 0..4")
        lo, hi = (float(v) for v in theta_range)
        if not lo < hi:
            raise ConfigError("medium.theta_range", "need lo < hi")
        s = np.linspace(lo, hi, CERTIFY_SAMPLES)
        half = 0.5 * (hi - lo) / (CERTIFY_SAMPLES - 1)
        c = P.polyval(s, c_poly)
        if np.any(c <= 0):
            raise NonPositiveSpeed(
                f"c(theta) <= 0 on theta_range at theta={s[np.argmin(c)]:.6g}")
        med = _medium_from_c(c, params)
        dc = P.polyval(s, P.polyder(c_poly))
        dh = np.abs(2 * c * dc)
        dzeta = np.abs((6 * params.alpha * c**2 / params.omega**2 + 2 * params.tau * c) * dc)
        dphi = np.abs(4 * params.alpha / (params.omega**2 * params.rho_a) * dc / c**2)

        h_floor = float(np.min(med.h) - dh.max() * half)
        zeta_floor = float(np.min(med.zeta) - dzeta.max() * half)
        phi_cap = float(np.max(med.phi) + dphi.max() * half)
        if h_floor <= 0:
            raise ConfigError("medium.c_poly", "cannot certify h floor > 0")
        if zeta_floor <= 0:
            raise ConfigError("medium.c_poly",
                              "cannot certify zeta floor > 0 (tau = alpha = 0?)")
        k_cap = abs(params.beta_acous) / (params.rho * h_floor)
        return cls(c_poly, params, (lo, hi), h_floor, zeta_floor, k_cap, phi_cap)

    @property
    def degree(self) -> int:
        return len(self.c_poly) - 1

    def growth_exponents(self) -> dict:
        """Exponents of the polynomial growth clauses implied by deg c.

        Informational only: h'' grows like |s|^(2n-2), zeta'' like |s|^(3n-2),
        while k and phi decay so their second derivatives stay bounded.
        """
        n = self.degree
        return {
            "gamma1_h": max(2 * n - 2, 0),
            "gamma2_k": 0,
            "gamma3_zeta": max(3 * n - 2, 0),
            "gamma4_phi": 0,
        }

    def bounds(self) -> dict:
        return {
            "h1": self.h_floor,
            "zeta1": self.zeta_floor,
            "k1": self.k_cap,
            "phi1": self.phi_cap,
        }


def _medium_from_c(c, params: PhysicalParams) -> Medium:
    h = c * c
    beta = 2.0 * params.alpha * c**3 / params.omega**2
    zeta = beta + params.tau * h
    k = params.beta_acous / (params.rho * h)
    phi = 2.0 * beta / (params.rho_a * h * h)
    return Medium(h, beta, zeta, k, phi)


def _check_range(model: CoefficientModel, theta, c):
    lo, hi = model.theta_range
    outside = (theta < lo) | (theta > hi)
    if not np.any(outside):
        return
    h = c[outside] ** 2 if np.ndim(c) else c**2
    if np.any(h < model.h_floor):
        raise RangeViolation(
            f"theta outside {model.theta_range} and h below certified floor {model.h_floor:.6g}")
    warnings.warn(f"theta outside certified range {model.theta_range}", RangeWarning,
                  stacklevel=3)


def eval_c(model: CoefficientModel, theta):
    """Speed of sound at temperature shift ``theta`` (scalar or array)."""
    theta = np.asarray(theta, dtype=float)
    c = P.polyval(theta, model.c_poly)
    if np.any(c <= 0):
        raise NonPositiveSpeed("speed of sound evaluated <= 0")
    _check_range(model, theta, c)
    return c if c.ndim else float(c)


def eval_medium(model: CoefficientModel, params: PhysicalParams, theta) -> Medium:
    return _medium_from_c(np.asarray(eval_c(model, theta)), params)


def eval_medium_slopes(model: CoefficientModel, params: PhysicalParams, theta):
    """Return (h', zeta', k', phi') at ``theta`` by the chain rule through c."""
    theta = np.asarray(theta, dtype=float)
    c = np.asarray(eval_c(model, theta))
    dc = P.polyval(theta, P.polyder(model.c_poly))
    a = params.alpha / params.omega**2
    dh = 2 * c * dc
    dzeta = (6 * a * c**2 + 2 * params.tau * c) * dc
    dk = -2 * params.beta_acous / (params.rho * c**3) * dc
    # phi = 4 a / (rho_a c)
    dphi = -4 * a / (params.rho_a * c**2) * dc
    return dh, dzeta, dk, dphi


def chi(model: CoefficientModel, params: PhysicalParams, theta):
    """Critical parameter zeta - tau*h; equals beta under the implemented laws."""
    med = eval_medium(model, params, theta)
    return med.zeta - params.tau * med.h
