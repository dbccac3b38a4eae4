"""Exact 1D fused-lasso solver, nonasymptotic bound engine, and Monte Carlo
verification harness."""

__version__ = "0.1.0"

from .errors import ConfigError, GflError, PreconditionError, UnsupportedModelError
from .losses import NoiseModel, QuantileLoss, SquareLoss, make_loss
from .signal import PiecewiseConstantSignal, SignalGeometry, compute_geometry
from .solver import FusedLassoProblem, FusedLassoSolution, solve

__all__ = [
    "__version__",
    "GflError",
    "ConfigError",
    "PreconditionError",
    "UnsupportedModelError",
    "SquareLoss",
    "QuantileLoss",
    "NoiseModel",
    "make_loss",
    "PiecewiseConstantSignal",
    "SignalGeometry",
    "compute_geometry",
    "FusedLassoProblem",
    "FusedLassoSolution",
    "solve",
]
