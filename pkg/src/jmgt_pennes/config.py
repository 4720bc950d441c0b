"""Run configuration: one strict JSON document.

Unknown keys are errors.  Every validation failure surfaces as ConfigError
carrying the dotted field path (e.g. ``physics.tau``).
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from .coupler import BallSpec, InitialData, resolve_data, small_data_norm
from .errors import ConfigError
from .model import CoefficientModel, PhysicalParams
from .spectral import BoxGrid, SpectralField


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridBlock(_Strict):
    lengths: List[float] = [1.0]
    modes: List[int] = [64]
    quad_points: Optional[List[int]] = None
    dims: Optional[int] = None


class PhysicsBlock(_Strict):
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
    westervelt: bool = False


class MediumBlock(_Strict):
    c_poly: List[float] = [1500.0, 2.0, -0.01]
    theta_range: List[float] = [-20.0, 60.0]


class FieldSpec(_Strict):
    preset: Literal["zero", "single_mode", "gaussian_bump_projected", "coefficients"] = "zero"
    amplitude: float = 1.0
    mode: Optional[List[int]] = None
    center: Optional[List[float]] = None
    width: Optional[float] = None
    coefficients: Optional[list] = None


class DataBlock(_Strict):
    p0: FieldSpec = FieldSpec()
    p1: FieldSpec = FieldSpec()
    p2: Optional[FieldSpec] = None
    theta0: FieldSpec = FieldSpec()
    # rescale (p0, p1, p2) so the small-data norm equals this value
    normalize_eta: Optional[float] = None


class BallBlock(_Strict):
    eta: float
    R1: float
    R2: float


class SolveBlock(_Strict):
    T: float = 1e-3
    dt: Optional[float] = None
    tol: float = 1e-8
    max_iter: int = 50
    eta0: Optional[float] = None
    ball: Optional[BallBlock] = None
    margin_floor: float = 0.0


class OutputBlock(_Strict):
    directory: str = "jps_out"
    sample_stride: int = 1
    formats: List[Literal["csv", "npz"]] = ["csv", "npz"]


class RunConfig(_Strict):
    grid: GridBlock = GridBlock()
    physics: PhysicsBlock = PhysicsBlock()
    medium: MediumBlock = MediumBlock()
    data: DataBlock = DataBlock()
    solve: SolveBlock = SolveBlock()
    output: OutputBlock = OutputBlock()

    # -- construction of solver objects -------------------------------------

    def build_grid(self) -> BoxGrid:
        g = self.grid
        if g.dims is not None and g.dims != len(g.lengths):
            raise ConfigError("grid.dims", "does not match len(grid.lengths)")
        try:
            return BoxGrid(tuple(g.lengths), tuple(g.modes),
                           None if g.quad_points is None else tuple(g.quad_points))
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None

    def build_params(self) -> PhysicalParams:
        return PhysicalParams(**self.physics.model_dump())

    def build_model(self, params: PhysicalParams = None) -> CoefficientModel:
        params = self.build_params() if params is None else params
        return CoefficientModel.certify(self.medium.c_poly, params, tuple(self.medium.theta_range))

    def build_data(self, grid: BoxGrid = None, params: PhysicalParams = None,
                   model: CoefficientModel = None) -> InitialData:
        grid = self.build_grid() if grid is None else grid
        params = self.build_params() if params is None else params
        d = self.data
        fields = {name: build_field(getattr(d, name), grid, f"data.{name}")
                  for name in ("p0", "p1", "theta0")}
        p2 = None if d.p2 is None else build_field(d.p2, grid, "data.p2")
        data = InitialData(fields["p0"], fields["p1"], fields["theta0"], p2)
        if d.normalize_eta is not None:
            model = self.build_model(params) if model is None else model
            data = normalize(data, d.normalize_eta, model, params)
        return data

    def build_ball(self):
        b = self.solve.ball
        return None if b is None else BallSpec(b.eta, b.R1, b.R2)

    @property
    def dt(self) -> float:
        return self.solve.dt if self.solve.dt is not None else self.solve.T / 2048

    def output_dir(self) -> Path:
        return Path(os.environ.get("JPS_OUTPUT_DIR") or self.output.directory)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def build_field(spec: FieldSpec, grid: BoxGrid, path: str) -> SpectralField:
    if spec.preset == "zero":
        return grid.zeros()
    if spec.preset == "single_mode":
        mode = spec.mode or [1] * grid.dims
        if len(mode) != grid.dims or any(k < 1 or k > M for k, M in zip(mode, grid.modes)):
            raise ConfigError(f"{path}.mode", f"mode {mode} not resolved by the grid")
        return grid.mode(*mode, amplitude=spec.amplitude)
    if spec.preset == "gaussian_bump_projected":
        center = spec.center or [0.5 * L for L in grid.lengths]
        width = spec.width or 0.1 * min(grid.lengths)
        if len(center) != grid.dims:
            raise ConfigError(f"{path}.center", "wrong dimension")
        if width <= 0:
            raise ConfigError(f"{path}.width", "must be > 0")

        def bump(*x):
            r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, center))
            return spec.amplitude * np.exp(-r2 / (2 * width**2))

        return grid.project(bump)
    c = np.asarray(spec.coefficients, dtype=float) if spec.coefficients is not None else None
    if c is None or c.ndim != grid.dims or any(n > M for n, M in zip(c.shape, grid.modes)):
        raise ConfigError(f"{path}.coefficients", f"need a {grid.dims}-d array within {grid.modes}")
    out = np.zeros(grid.modes)
    out[tuple(slice(0, n) for n in c.shape)] = c
    return SpectralField(grid, spec.amplitude * out)


def normalize(data: InitialData, eta: float, model: CoefficientModel,
              params: PhysicalParams) -> InitialData:
    """Scale the pressure data so the small-data norm equals ``eta``.

    When p2 is not given the norm is measured with the consistent p2, which
    depends (weakly) nonlinearly on the scale, so the scale is refined a few times.
    """
    if small_data_norm(resolve_data(data, model, params), params.tau) == 0:
        raise ConfigError("data.normalize_eta", "pressure data are zero")
    for _ in range(8):
        size = small_data_norm(resolve_data(data, model, params), params.tau)
        data = data.scaled(eta / size)
        if abs(size - eta) <= 1e-14 * eta:
            break
    return data


def _loc(err) -> str:
    return ".".join(str(p) for p in err["loc"])


def parse_config(text: str) -> RunConfig:
    try:
        cfg = RunConfig.model_validate_json(text)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(_loc(first) or "<root>", first["msg"]) from None
    # eager validation of the physics and medium invariants
    params = cfg.build_params()
    cfg.build_grid()
    cfg.build_model(params)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return parse_config(text)


def params_dict(params: PhysicalParams) -> dict:
    return asdict(params)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
