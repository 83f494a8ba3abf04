"""Sampling and iterative reconstruction of concentrated signals in shift-invariant spaces."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .errors import (
    ConstructionError,
    DivergenceError,
    InfeasibleError,
    RKReconError,
    UndefinedRatioError,
    UnsupportedAlphaError,
)
from .kernel_space import KernelSpace, QuadratureSpec, Signal, make_space
from .sampling import SamplingSet
from .reconstruct import iterate, preconstruct

__all__ = [
    "ConstructionError",
    "DivergenceError",
    "InfeasibleError",
    "KernelSpace",
    "QuadratureSpec",
    "RKReconError",
    "SamplingSet",
    "Signal",
    "UndefinedRatioError",
    "UnsupportedAlphaError",
    "__version__",
    "iterate",
    "make_space",
    "preconstruct",
]
