"""Posterior consistency machinery for Bayesian inverse problems.

Rate calculators, Hilbert-scale arithmetic, series priors, a 1D elliptic
forward/inverse pair and Monte Carlo contraction experiments.
"""

from postcon.errors import (
    DegeneratePressureError,
    InconsistencyError,
    PreconditionError,
)
from postcon.spectral import ScaleSpec, SpectralField

__all__ = [
    "DegeneratePressureError",
    "InconsistencyError",
    "PreconditionError",
    "ScaleSpec",
    "SpectralField",
]

__version__ = "0.1.0"
