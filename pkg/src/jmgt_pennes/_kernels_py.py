"""Pure-Python/numpy versions of the compiled kernels.

Loops run over time steps; each step is vectorised over modes.  Arguments and
in-place outputs match ``_kernels.pyx`` exactly.
"""
import math

import numpy as np


def midpoint_march_diag(lam, tau, dt, r_mid, b_mid, f_mid, r_end, b_end, f_end, P, Q, W):
    h = 0.5 * dt
    has_f = f_mid.shape[0] > 0
    for n in range(P.shape[0] - 1):
        r, b = r_mid[n], b_mid[n]
        f = f_mid[n] if has_f else 0.0
        p, q, w = P[n], Q[n], W[n]
        if tau > 0:
            rhs = (2.0 * tau / dt) * w - r * lam * (p + h * q) - b * lam * q + f
            wb = rhs / (1.0 + 2.0 * tau / dt + (r * h * h + b * h) * lam)
            qb = q + h * wb
            pb = p + h * qb
            W[n + 1] = 2.0 * wb - w
        else:
            rhs = (2.0 / dt) * q - r * lam * p + f
            qb = rhs / (2.0 / dt + (r * h + b) * lam)
            pb = p + h * qb
        Q[n + 1] = 2.0 * qb - q
        P[n + 1] = 2.0 * pb - p
        if tau <= 0:
            fe = f_end[n] if has_f else 0.0
            W[n + 1] = -r_end[n] * lam * P[n + 1] - b_end[n] * lam * Q[n + 1] + fe


def exp_march(decay, gain, g_mid, out):
    for n in range(out.shape[0] - 1):
        out[n + 1] = decay * out[n] + gain * g_mid[n]


def gronwall_recurrence(u0, t, a, b, out):
    out[0] = u0
    for n in range(len(t) - 1):
        dt = t[n + 1] - t[n]
        g = math.exp(0.5 * dt * (a[n] + a[n + 1]))
        out[n + 1] = out[n] * g + 0.5 * dt * (b[n] * g + b[n + 1])
