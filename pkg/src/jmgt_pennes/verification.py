"""Built-in oracle suite behind ``jps verify``.

Each case runs a solver against a closed-form reference and returns the
measured quantities; ``CHECKS`` pairs them with pass thresholds.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from . import coupler, jmgt, oracles, pennes
from .model import CoefficientModel, PhysicalParams
from .spectral import BoxGrid, SpectralField, hnorm2

# single-mode constant-coefficient configuration
SM_TAU, SM_LAM, SM_R, SM_B, SM_T = 1e-6, np.pi**2, 2.25e6, 2.25, 1e-3


def orders(dts, errors):
    return [float(np.log(errors[i - 1] / errors[i]) / np.log(dts[i - 1] / dts[i]))
            for i in range(1, len(errors))]


def single_mode_errors(steps=(512, 1024, 2048, 4096), tau=SM_TAU, r=SM_R, b=SM_B, T=SM_T):
    """Max relative error in p of the midpoint solver against the cubic-root oracle."""
    g = BoxGrid((1.0,), (1,))
    lam = float(g.eigenvalues[0])
    p0, p1, p2 = 1.0, 0.0, -r * lam
    init = jmgt.AcousticState(0.0, g.mode(1, amplitude=p0), g.mode(1, amplitude=p1),
                              g.mode(1, amplitude=p2))
    track = jmgt.CoefficientTrack.constant(r, b)
    errs = []
    for n in steps:
        traj = jmgt.solve(init, track, None, T, T / n, tau)
        ref = oracles.mgt_mode(tau, lam, r, b, p0, p1, p2, traj.times)[0]
        errs.append(float(np.max(np.abs(traj.p[:, 0] - ref)) / np.max(np.abs(ref))))
    return [T / n for n in steps], errs


def pennes_decay_error(dts=(1e-3, 1e-1), T=1.0) -> float:
    """Max deviation of free single-mode decay from the exact exponential."""
    params = PhysicalParams()
    g = BoxGrid((1.0,), (4,))
    worst = 0.0
    for dt in dts:
        traj = pennes.solve(g.mode(1), None, T, dt, params)
        lam = g.eigenvalues[0]
        ref = oracles.mode_decay(params.kappa_a, lam, params.ell, params.m, traj.times)
        worst = max(worst, float(np.max(np.abs(traj.theta[:, 0] - ref))),
                    float(np.max(np.abs(traj.theta[:, 1:]))))
    return worst


MMS = dict(tau=1e-6, r0=2.25e6, b=2.25, w=5000.0, T=1e-3, modes=64)


def manufactured_errors(steps=(512, 1024, 2048, 4096), **kw):
    """Relative L-inf-L2 error against sin(pi x) cos(w t) with r = r0 (1 + t)."""
    c = dict(MMS, **kw)
    g = BoxGrid((1.0,), (c["modes"],))
    mm = oracles.ManufacturedMGT(c["tau"], c["r0"], c["b"], c["w"])
    e1 = np.zeros(g.modes)
    e1[0] = mm.coefficient
    track = jmgt.CoefficientTrack(lambda t: (mm.r(t), c["b"]), r0=c["r0"], b0=c["b"])
    init = jmgt.AcousticState(0.0, *(SpectralField(g, a * e1) for a in mm.amplitude(0.0)))
    errs = []
    for n in steps:
        traj = jmgt.solve(init, track, lambda t: mm.forcing(t) * e1, c["T"], c["T"] / n, c["tau"])
        ref = np.multiply.outer(mm.amplitude(traj.times)[0], e1)
        errs.append(float(np.sqrt(np.max(hnorm2(g, traj.p - ref, 0))
                                  / np.max(hnorm2(g, ref, 0)))))
    return [c["T"] / n for n in steps], errs


def decoupled_params() -> PhysicalParams:
    return PhysicalParams(beta_acous=0.0, alpha=0.0)


def decoupled_run(modes=32, T=1e-4, dt=None):
    """Picard report for k = phi = 0 with Theta0 = 0 (T is then a constant map)."""
    params = decoupled_params()
    model = CoefficientModel.certify([1500.0, 2.0, -0.01], params)
    g = BoxGrid((1.0,), (modes,))
    data = coupler.InitialData(g.mode(1, amplitude=1e-4), g.mode(2, amplitude=1e-4), g.zeros())
    dt = T / 256 if dt is None else dt
    return coupler.solve_nonlinear(data, model, params, T, dt, tol=1e-8, max_iter=10)


class Check(NamedTuple):
    name: str
    run: Callable[[], dict]


def _single_mode():
    dts, errs = single_mode_errors()
    o = orders(dts, errs)
    ok = errs[-1] <= 1e-6 and all(abs(v - 2.0) <= 0.2 for v in o)
    return ok, f"error={errs[-1]:.3e} orders={[round(v, 3) for v in o]}"


def _pennes():
    e = pennes_decay_error()
    return e <= 1e-12, f"max deviation={e:.3e}"


def _mms():
    dts, errs = manufactured_errors()
    o = orders(dts, errs)
    ok = errs[-1] <= 1e-5 and all(abs(v - 2.0) <= 0.2 for v in o)
    return ok, f"error={errs[-1]:.3e} orders={[round(v, 3) for v in o]}"


def _decoupled():
    rep = decoupled_run().report
    ok = len(rep) == 2 and rep.ydiff[1] <= 1e-12
    return ok, f"iterations={len(rep)} ydiff2={rep.ydiff[-1]:.3e}"


CHECKS = [
    Check("single-mode MGT vs cubic-root oracle", _single_mode),
    Check("Pennes integrating-factor exactness", _pennes),
    Check("manufactured solution, time-varying r", _mms),
    Check("decoupled fixed point in two iterations", _decoupled),
]


def run_all(echo=print) -> bool:
    ok_all = True
    for check in CHECKS:
        ok, detail = check.run()
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {check.name}: {detail}")
    return ok_all
