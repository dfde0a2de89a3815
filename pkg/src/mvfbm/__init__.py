"""Mean-field SDEs driven by fractional Brownian motion: sampling, simulation,
and convergence experiments."""

from mvfbm.fbm import HurstParameter, TimeGrid, FbmPath
from mvfbm.measures import EmpiricalMeasure, PathEnsemble
from mvfbm.model import MeanFieldCoefficients
from mvfbm.simulate import SimConfig, SeedScheme

__all__ = [
    "HurstParameter",
    "TimeGrid",
    "FbmPath",
    "EmpiricalMeasure",
    "PathEnsemble",
    "MeanFieldCoefficients",
    "SimConfig",
    "SeedScheme",
]

__version__ = "0.1.0"
