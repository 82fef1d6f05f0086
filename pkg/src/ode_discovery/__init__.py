"""Discover linear constant-coefficient ODEs from sampled data.

Pipeline: a genetic algorithm fits an eigenfunction general solution, a
B-spline re-approximates that smooth curve, and the ODE coefficients come
from the null space of the spline's derivative matrix.
"""
from .characteristic import CoefficientVector, EigenMode, EigenSpectrum, eigen_spectrum
from .config import RunConfig
from .datagen import NoiseSpec, SpringParams
from .errors import DiscoveryError, InputError, NumericalError, StageError
from .evolve import GAConfig, GAResult, run_ga
from .gensol import BasisLayout, GeneralSolutionModel, TimeSeries
from .nullspace import DiscoveredODE
from .pipeline import RunReport, benchmark_edc, benchmark_spring, discover, sparsity_map

__version__ = "0.1.0"

__all__ = [
    "BasisLayout",
    "CoefficientVector",
    "DiscoveredODE",
    "DiscoveryError",
    "EigenMode",
    "EigenSpectrum",
    "GAConfig",
    "GAResult",
    "GeneralSolutionModel",
    "InputError",
    "NoiseSpec",
    "NumericalError",
    "RunConfig",
    "RunReport",
    "SpringParams",
    "StageError",
    "TimeSeries",
    "benchmark_edc",
    "benchmark_spring",
    "discover",
    "eigen_spectrum",
    "run_ga",
    "sparsity_map",
]
