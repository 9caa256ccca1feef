"""
Fast spectral evaluation of the Boltzmann collision operator and its learned
separable counterpart. Importable without Django.
"""

from .exceptions import (
    ConfigError,
    ContractError,
    FormatError,
    NumericalError,
    OracleError,
    SpectralError,
)
from .grid import SpectralField, VelocityGrid, analyze, synthesize
from .kernel import KernelSpec, QuadratureRule, build_separable_quadrature, q_direct, q_fast
from .specnet import SpecNetParams, TrainOptions, forward, train

__all__ = [
    "ConfigError",
    "ContractError",
    "FormatError",
    "KernelSpec",
    "NumericalError",
    "OracleError",
    "QuadratureRule",
    "SpecNetParams",
    "SpectralError",
    "SpectralField",
    "TrainOptions",
    "VelocityGrid",
    "analyze",
    "build_separable_quadrature",
    "forward",
    "q_direct",
    "q_fast",
    "synthesize",
    "train",
]
