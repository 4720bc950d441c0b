"""Run orchestration: single runs, tau sweeps and dt convergence studies.

Every run directory holds a manifest.json that lists each emitted file with
its sha256.  Floats are written with 17 significant digits.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import zipfile
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import RunConfig
from .coupler import (NonlinearResult, _Frozen, _track, apply_T,
                      degeneracy_margin, solve_nonlinear, ynorm_diff)
from .diagnostics import EnergyReport, energies, envelope_audit, forcing_norms, lambda0, lambda_
from .model import chi
from .spectral import hnorm2, write_field_csv

log = logging.getLogger(__name__)

SCHEMA = {
    "acoustic.csv": "t; norm_p_H2; norm_pt_H2; norm_ptt_H1; E0; E1; E; D0; D",
    "thermal.csv": ("t; norm_theta_H2; norm_theta_H3; norm_theta_t_H1; int_theta_H3_sq; "
                    "int_theta_t_H2_sq; int_theta_tt_L2_sq"),
    "iteration.csv": "n; ydiff; ratio; xp1; xp2; xtheta2; margin; accepted (0/1)",
    "energy.csv": "t; E0; E1; E; D0; D; Lambda0; Lambda; chi_min; degeneracy_margin",
    "envelope.csv": "t; E0_E1_intD0; envelope_lower; E_intD; envelope_higher (unit constants)",
    "final_p.csv / final_theta.csv": "k1..kd; coefficient (sine-basis coefficients at t=T)",
    "residuals.json": "shifted-system residuals (absolute and relative, L2 in time and space)",
    "final_state.npz": "coefficient arrays p, pt, ptt, theta, theta_t at t=T",
}

SWEEP_SCHEMA = "tau; p_diff_LinfL2; theta_diff_LinfL2; iterations"
CONVERGE_SCHEMA = "dt; error_LinfL2; order (exact: all errors zero)"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_table(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(directory: Path, payload: dict):
    """manifest.json with a content hash for every other file in ``directory``."""
    files = {p.name: sha256(p) for p in sorted(directory.iterdir())
             if p.is_file() and p.name != "manifest.json"}
    payload = dict(payload, files=files, version=__version__, kernel_backend=kernels.BACKEND)
    (directory / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True))


def save_npz(path: Path, **arrays):
    """np.savez-compatible archive with fixed entry timestamps (reproducible bytes)."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arr), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0)),
                        buf.getvalue())


def _write_schema(directory: Path, entries: dict):
    lines = ["# Output schema", ""]
    lines += [f"- `{name}`: {cols}" for name, cols in entries.items()]
    (directory / "SCHEMA.md").write_text("\n".join(lines) + "\n")


# -- single run -----------------------------------------------------------------

@dataclass
class RunOutcome:
    directory: Path
    result: NonlinearResult
    energy: EnergyReport


def solution_energy(result: NonlinearResult, model, params, stride: int = 1):
    """Energies, monitors and envelope audit along the converged solution.

    The coefficients are h(Theta), zeta(Theta) of the solution itself and the
    forcing is the product-form source built from it.
    """
    x = result.solution
    a = x.acoustic
    frozen = _Frozen(x, model, params)
    track = _track(frozen, model)
    t = a.times
    idx = np.arange(0, len(t), max(stride, 1))
    if idx[-1] != len(t) - 1:
        idx = np.append(idx, len(t) - 1)
    delta = float(t[1] - t[0]) if len(t) > 1 else 1.0
    rng = (float(t[0]), float(t[-1]))
    g = a.grid
    theta_phys = g.to_physical(x.thermal.theta)
    margins = degeneracy_margin(x, model, params)
    rows, L0, L, chi_min = [], [], [], []
    for i in idx:
        r, b = track.sampler(t[i])
        rows.append(energies(a.state(i), r, b, params.tau)[1:])
        L0.append(lambda0(track, t[i], delta, g, rng))
        L.append(lambda_(track, t[i], delta, rng))
        chi_min.append(float(np.min(chi(model, params, theta_phys[i]))))
    arr = np.array(rows).T
    report = EnergyReport(t[idx], *arr, np.array(L0), np.array(L), np.array(chi_min),
                          margins[idx])
    sub = type(a)(g, t[idx], a.p[idx], a.pt[idx], a.ptt[idx], a.tau)
    F0, F = forcing_norms(sub, frozen.acoustic_source)
    return report, envelope_audit(report, F0, F)


def run(cfg: RunConfig, directory: Path = None) -> RunOutcome:
    """Solve the configured problem and write every artifact; raises on failure."""
    directory = Path(directory) if directory is not None else cfg.output_dir()
    directory.mkdir(parents=True, exist_ok=True)
    grid = cfg.build_grid()
    params = cfg.build_params()
    model = cfg.build_model(params)
    data = cfg.build_data(grid, params, model)
    ball = cfg.build_ball()
    if ball is not None:
        ball.validate(model.k_cap, grid.dims)
    s = cfg.solve
    result = solve_nonlinear(data, model, params, s.T, cfg.dt, ball=ball, tol=s.tol,
                             max_iter=s.max_iter, eta0=s.eta0, margin_floor=s.margin_floor)
    x = result.solution
    gap = ynorm_diff(x, apply_T(x, result.data, model, params, s.T, cfg.dt))
    residuals = dict(result.residuals, fixed_point_gap=gap)

    stride = cfg.output.sample_stride
    energy, audit = solution_energy(result, model, params, stride)
    idx = np.searchsorted(x.acoustic.times, energy.t)

    ac = x.acoustic.norm_table()[idx]
    write_table(directory / "acoustic.csv",
                ["t", "norm_p_H2", "norm_pt_H2", "norm_ptt_H1", "E0", "E1", "E", "D0", "D"],
                np.column_stack([ac, energy.E0, energy.E1, energy.E, energy.D0, energy.D]))
    th = x.thermal.norm_table(params)[idx]
    write_table(directory / "thermal.csv",
                ["t", "norm_theta_H2", "norm_theta_H3", "norm_theta_t_H1", "int_theta_H3_sq",
                 "int_theta_t_H2_sq", "int_theta_tt_L2_sq"], th)
    result.report.write_csv(directory / "iteration.csv")
    energy.write_csv(directory / "energy.csv")
    audit.write_csv(directory / "envelope.csv")
    (directory / "residuals.json").write_text(json.dumps(residuals, indent=2, sort_keys=True))

    fin_a, fin_t = x.acoustic.final, x.thermal.final
    if "npz" in cfg.output.formats:
        save_npz(directory / "final_state.npz", p=fin_a.p.coeffs, pt=fin_a.pt.coeffs,
                 ptt=fin_a.ptt.coeffs, theta=fin_t.theta.coeffs, theta_t=fin_t.theta_t.coeffs)
    if "csv" in cfg.output.formats:
        write_field_csv(fin_a.p, directory / "final_p.csv")
        write_field_csv(fin_t.theta, directory / "final_theta.csv")
    _write_schema(directory, SCHEMA)
    write_manifest(directory, {
        "kind": "run",
        "config": json.loads(cfg.to_json()),
        "certified_bounds": model.bounds(),
        "growth_exponents": model.growth_exponents(),
        "iterations": len(result.report),
        "ball": asdict(result.ball),
    })
    return RunOutcome(directory, result, energy)


# -- tau sweep --------------------------------------------------------------------

def _linf_l2(a: np.ndarray, b: np.ndarray, grid) -> float:
    return float(np.sqrt(np.max(hnorm2(grid, a - b, 0))))


def _check_taus(taus):
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("tau list is empty")
    if any(not t > 0 for t in taus):
        raise ValueError("tau list must be positive")
    if any(b > a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau list must be decreasing")
    return taus


def sweep_tau(cfg: RunConfig, taus, directory: Path = None) -> list:
    """Distance of each tau-run to the Westervelt-Pennes reference (tau = 0).

    The pressure data are built once from the base config and shared by all
    runs; p2 is re-derived per run unless the config fixes it.
    Returns rows (tau, ||p_tau - p_0||_LinfL2, ||Theta_tau - Theta_0||_LinfL2, iterations).
    """
    taus = _check_taus(taus)
    grid = cfg.build_grid()
    base = cfg.build_params()
    data = cfg.build_data(grid, base, cfg.build_model(base))
    s = cfg.solve

    def solve_at(tau, westervelt=False):
        params = replace(base, tau=tau, westervelt=westervelt)
        model = cfg.build_model(params)
        return solve_nonlinear(data, model, params, s.T, cfg.dt, tol=s.tol, max_iter=s.max_iter,
                               margin_floor=s.margin_floor, check_residual=False)

    ref = solve_at(0.0, westervelt=True).solution
    rows = []
    for tau in taus:
        res = solve_at(tau)
        x = res.solution
        rows.append((tau, _linf_l2(x.acoustic.p, ref.acoustic.p, grid),
                     _linf_l2(x.thermal.theta, ref.thermal.theta, grid), len(res.report)))
    if directory is not None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_table(directory / "sweep_tau.csv",
                    ["tau", "p_diff_LinfL2", "theta_diff_LinfL2", "iterations"], rows)
        _write_schema(directory, {"sweep_tau.csv": SWEEP_SCHEMA})
        write_manifest(directory, {"kind": "sweep_tau", "config": json.loads(cfg.to_json()),
                                   "taus": taus})
    return rows


# -- dt convergence -------------------------------------------------------------------

EXACT = "exact"


def observed_orders(dts, errors) -> list:
    """log(e_{i-1}/e_i)/log(dt_{i-1}/dt_i); ``EXACT`` when both errors vanish."""
    out = [float("nan")]
    for i in range(1, len(dts)):
        e0, e1 = errors[i - 1], errors[i]
        if e0 == 0 and e1 == 0:
            out.append(EXACT)
        elif e0 == 0 or e1 == 0:
            out.append(float("nan"))
        else:
            out.append(float(np.log(e0 / e1) / np.log(dts[i - 1] / dts[i])))
    return out


def _check_dts(dts, T):
    dts = [float(d) for d in dts]
    if len(dts) < 3:
        raise ValueError("need at least three dt values")
    for a, b in zip(dts, dts[1:]):
        if not np.isclose(a, 2 * b, rtol=1e-12, atol=0):
            raise ValueError("dt list must be a halving sequence")
    return dts


def convergence_study(cfg: RunConfig, dts, exact=None, directory: Path = None) -> list:
    """Observed temporal order of the coupled solve.

    ``exact(times) -> p coefficients`` gives the reference and errors are
    ||p_dt - p_exact||_LinfL2.  Without it, the error of each dt is the
    distance to the next finer run (Richardson self-convergence), so the
    finest dt has no row.  All comparisons use the coarsest time mesh.
    """
    s = cfg.solve
    dts = _check_dts(dts, s.T)
    grid = cfg.build_grid()
    params = cfg.build_params()
    model = cfg.build_model(params)
    data = cfg.build_data(grid, params, model)
    coarse = np.arange(round(s.T / dts[0]) + 1) * dts[0]
    sols = []
    for dt in dts:
        res = solve_nonlinear(data, model, params, s.T, dt, tol=s.tol, max_iter=s.max_iter,
                              margin_floor=s.margin_floor, check_residual=False)
        sols.append(res.solution.acoustic.p[::round(dts[0] / dt)])
    if exact is not None:
        ref = exact(coarse)
        errors = [_linf_l2(p, ref, grid) for p in sols]
        used = dts
    else:
        errors = [_linf_l2(a, b, grid) for a, b in zip(sols, sols[1:])]
        used = dts[:-1]
    orders = observed_orders(used, errors)
    rows = list(zip(used, errors, orders))
    if directory is not None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_table(directory / "convergence.csv", ["dt", "error_LinfL2", "order"], rows)
        _write_schema(directory, {"convergence.csv": CONVERGE_SCHEMA})
        write_manifest(directory, {"kind": "convergence", "config": json.loads(cfg.to_json()),
                                   "dts": dts, "reference": "exact" if exact else "finest"})
    return rows
