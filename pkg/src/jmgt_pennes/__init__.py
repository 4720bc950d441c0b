"""Spectral Galerkin solver for the coupled JMGT-Pennes system on a box."""
from .errors import *  # noqa: F401,F403
from .model import CoefficientModel, PhysicalParams, chi, eval_c, eval_medium
from .spectral import BoxGrid, SpectralField, laplacian, pointwise_product, sobolev_norm
from .jmgt import AcousticState, AcousticTrajectory, CoefficientTrack
from .pennes import ThermalState, ThermalTrajectory, compat_theta1
from .coupler import (BallSpec, CoupledTrajectory, InitialData, apply_T, residual_shifted,
                      solve_nonlinear, ynorm_diff)
from .diagnostics import energies, energy_report, gronwall_envelope, lambda0, lambda_

__version__ = "0.1.0"
