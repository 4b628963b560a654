"""Simulation and verification toolkit for Ornstein-Uhlenbeck processes
driven by Lévy jump noise: exact sampling, coupling bounds on total
variation, Harnack-type inequalities and rank conditions for smoothing."""

from .densities import (GaussianDensity, JumpDensity, PolynomialDecayDensity,
                        TabulatedDensity, TruncatedStableDensity, density_from_config)
from .errors import (ConsistencyError, InvalidInputError, LevyOUError, PreconditionError,
                     RankDeficientError)
from .levy_sim import JumpPath, LevyNoise, PathBatch, ou_terminal_state, sample_X
from .linmodel import OUModel, column_split, matrix_exp
from .mc import Comparison, MeanEstimate

__version__ = "0.1.0"

__all__ = [
    "Comparison", "ConsistencyError", "GaussianDensity", "InvalidInputError", "JumpDensity",
    "JumpPath", "LevyNoise", "LevyOUError", "MeanEstimate", "OUModel", "PathBatch",
    "PolynomialDecayDensity", "PreconditionError", "RankDeficientError", "TabulatedDensity",
    "TruncatedStableDensity", "column_split", "density_from_config", "matrix_exp",
    "ou_terminal_state", "sample_X",
]
