# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-march kernels.  Same contracts as ``_kernels_py``."""
from libc.math cimport exp


def midpoint_march_diag(const double[:] lam, double tau, double dt,
                        const double[:] r_mid, const double[:] b_mid,
                        const double[:, :] f_mid,
                        const double[:] r_end, const double[:] b_end,
                        const double[:, :] f_end,
                        double[:, :] P, double[:, :] Q, double[:, :] W):
    cdef Py_ssize_t n, k
    cdef Py_ssize_t nsteps = P.shape[0] - 1
    cdef Py_ssize_t K = lam.shape[0]
    cdef bint has_f = f_mid.shape[0] > 0
    cdef double a0, c, rhs, wb, qb, pb, lk, fk, r, b
    cdef double h = 0.5 * dt
    for n in range(nsteps):
        r = r_mid[n]
        b = b_mid[n]
        if tau > 0:
            a0 = 1.0 + 2.0 * tau / dt
            c = r * h * h + b * h
            for k in range(K):
                lk = lam[k]
                fk = f_mid[n, k] if has_f else 0.0
                rhs = (2.0 * tau / dt) * W[n, k] - r * lk * (P[n, k] + h * Q[n, k]) \
                    - b * lk * Q[n, k] + fk
                wb = rhs / (a0 + c * lk)
                qb = Q[n, k] + h * wb
                pb = P[n, k] + h * qb
                W[n + 1, k] = 2.0 * wb - W[n, k]
                Q[n + 1, k] = 2.0 * qb - Q[n, k]
                P[n + 1, k] = 2.0 * pb - P[n, k]
        else:
            a0 = 2.0 / dt
            c = r * h + b
            for k in range(K):
                lk = lam[k]
                fk = f_mid[n, k] if has_f else 0.0
                rhs = a0 * Q[n, k] - r * lk * P[n, k] + fk
                qb = rhs / (a0 + c * lk)
                pb = P[n, k] + h * qb
                Q[n + 1, k] = 2.0 * qb - Q[n, k]
                P[n + 1, k] = 2.0 * pb - P[n, k]
                fk = f_end[n, k] if has_f else 0.0
                W[n + 1, k] = -r_end[n] * lk * P[n + 1, k] - b_end[n] * lk * Q[n + 1, k] + fk


def exp_march(const double[:] decay, const double[:] gain,
              const double[:, :] g_mid, double[:, :] out):
    cdef Py_ssize_t n, k
    cdef Py_ssize_t nsteps = out.shape[0] - 1
    cdef Py_ssize_t K = decay.shape[0]
    for n in range(nsteps):
        for k in range(K):
            out[n + 1, k] = decay[k] * out[n, k] + gain[k] * g_mid[n, k]


def gronwall_recurrence(double u0, const double[:] t, const double[:] a,
                        const double[:] b, double[:] out):
    cdef Py_ssize_t n
    cdef Py_ssize_t N = t.shape[0]
    cdef double dt, g
    out[0] = u0
    for n in range(N - 1):
        dt = t[n + 1] - t[n]
        g = exp(0.5 * dt * (a[n] + a[n + 1]))
        out[n + 1] = out[n] * g + 0.5 * dt * (b[n] * g + b[n + 1])
