"""Simulation and regularity diagnostics for the additive stochastic heat equation on the line."""

__version__ = "0.1.0"

from .errors import ConfigError, HeatpathError, NumericalError, PSDError, QuadratureError
from .kernels import Modulus, SpaceSection, SpaceTime, TimeSection
from .rng import SeedSpec
from .sampler import GridSpec, SamplePath, sample_paths

__all__ = [
    "ConfigError",
    "GridSpec",
    "HeatpathError",
    "Modulus",
    "NumericalError",
    "PSDError",
    "QuadratureError",
    "SamplePath",
    "SeedSpec",
    "SpaceSection",
    "SpaceTime",
    "TimeSection",
    "sample_paths",
    "__version__",
]
