"""Exception types shared across covkit."""

import numpy as np


class CovkitError(Exception):
    """Base class for all covkit errors."""


class NotPositiveDefinite(CovkitError, np.linalg.LinAlgError):
    """A matrix that must be strictly positive definite is not.

    ``index`` locates the offending element of a batched factorization,
    ``context`` carries free-form details (point pairs, a GramReport).
    """

    def __init__(self, message, *, index=None, context=None):
        super().__init__(message)
        self.index = index
        self.context = context


class DimensionMismatch(CovkitError, ValueError):
    pass


class ParamOutOfRange(CovkitError, ValueError):
    pass


class DomainError(ParamOutOfRange):
    pass


class QuadratureNoConvergence(CovkitError, RuntimeError):
    pass
