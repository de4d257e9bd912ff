"""Covariance and cross-covariance kernels built from normal scale mixtures."""

from .errors import (
    CovkitError,
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    ParamOutOfRange,
    QuadratureNoConvergence,
)
from .kernels import CrossCovKernel, CrossVariogram, GramReport, assess, gram
from .mixtures import (
    MixingLaw,
    ScaleMixture,
    Weight,
    eval_mixture,
    gaussian,
    generalized_cauchy,
    mixture_from_law,
    stable,
    whittle_matern,
)

__version__ = "0.1.0"

__all__ = [
    "CovkitError",
    "DimensionMismatch",
    "DomainError",
    "NotPositiveDefinite",
    "ParamOutOfRange",
    "QuadratureNoConvergence",
    "CrossCovKernel",
    "CrossVariogram",
    "GramReport",
    "assess",
    "gram",
    "MixingLaw",
    "ScaleMixture",
    "Weight",
    "eval_mixture",
    "gaussian",
    "generalized_cauchy",
    "mixture_from_law",
    "stable",
    "whittle_matern",
]
