"""Dense symmetric linear algebra used by the kernels and validators.

Matrices here are small (kernel parameters are at most 4x4) or moderate
(Gram matrices of at most a few thousand points), so everything is dense
and delegates to LAPACK through numpy/scipy.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite

__all__ = [
    "CholFactor",
    "symmetrize",
    "cholesky",
    "spd_solve",
    "logdet",
    "min_max_eig",
    "is_psd",
    "batched_cholesky",
    "batched_quad_logdet",
]

JITTER_START = 1e-12
JITTER_STOP = 1e-6
ASYMMETRY_WARN = 1e-10


def symmetrize(a, *, warn=True):
    """Return ``(a + a.T) / 2`` as a float array.

    A warning is emitted when the relative asymmetry of the input exceeds
    ``1e-10``; small round-off asymmetry is silently averaged away.
    """
    a = np.array(a, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionMismatch("matrix must have n >= 1")
    if warn:
        scale = max(np.abs(a).max(), np.finfo(float).tiny)
        asym = np.abs(a - a.T).max() / scale
        if asym > ASYMMETRY_WARN:
            warnings.warn(
                f"symmetrizing matrix with relative asymmetry {asym:.3g}",
                RuntimeWarning,
                stacklevel=2,
            )
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class CholFactor:
    """Lower Cholesky factor ``L`` with ``L @ L.T == S + jitter * I``."""

    L: np.ndarray
    jitter: float = 0.0

    @property
    def n(self):
        return self.L.shape[0]

    def reconstruct(self):
        return self.L @ self.L.T


def _try_cholesky(a):
    try:
        L = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.diag(L) > 0) or not np.all(np.isfinite(L)):
        return None
    return L


def cholesky(S, allow_jitter=False):
    """Cholesky factorization with an optional diagonal jitter ladder.

    The plain factorization is tried first. If it fails and
    ``allow_jitter`` is set, a diagonal shift is tried that starts at
    ``1e-12 * trace(S) / n`` and grows by factors of ten up to
    ``1e-6 * trace(S) / n``.

    Raises
    ------
    NotPositiveDefinite
        If no rung of the ladder yields a factorization.
    """
    a = np.asarray(S, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    L = _try_cholesky(a)
    if L is not None:
        return CholFactor(L, 0.0)
    if allow_jitter:
        n = a.shape[0]
        base = np.trace(a) / n
        if base > 0:
            eye = np.eye(n)
            for k in range(int(round(np.log10(JITTER_STOP / JITTER_START))) + 1):
                jitter = JITTER_START * 10.0**k * base
                L = _try_cholesky(a + jitter * eye)
                if L is not None:
                    return CholFactor(L, float(jitter))
    raise NotPositiveDefinite(
        "matrix is not positive definite"
        + (" even at maximum jitter" if allow_jitter else "")
    )


def spd_solve(F, b):
    """Solve ``(L L^T) x = b`` for a vector or a matrix of right-hand sides."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != F.n:
        raise DimensionMismatch(f"rhs has length {b.shape[0]}, factor is {F.n}x{F.n}")
    return scipy.linalg.cho_solve((F.L, True), b, check_finite=False)


def logdet(F):
    """Log-determinant ``2 * sum(log(diag(L)))``."""
    return 2.0 * float(np.sum(np.log(np.diag(F.L))))


def min_max_eig(S):
    """Smallest and largest eigenvalue of a symmetric matrix."""
    w = scipy.linalg.eigvalsh(np.asarray(S, dtype=float), check_finite=False)
    return float(w[0]), float(w[-1])


def is_psd(S, rtol=1e-12):
    lo, hi = min_max_eig(S)
    return lo >= -rtol * max(abs(hi), 1.0)


def batched_cholesky(S):
    """Cholesky of a stack of matrices ``(..., n, n)``.

    On failure the error's ``index`` is the multi-index of the first
    element of the stack that is not strictly positive definite.
    """
    S = np.asarray(S, dtype=float)
    with np.errstate(invalid="ignore"):
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            L = None
    if L is not None and np.all(np.isfinite(L)):
        return L
    bad = ~np.all(np.linalg.eigvalsh(S) > 0, axis=-1)
    if not np.any(bad):
        # eigvalsh and potrf can disagree for matrices at the numerical edge
        bad = np.ones(S.shape[:-2], dtype=bool)
    idx = tuple(int(i) for i in np.argwhere(bad)[0]) if bad.ndim else ()
    raise NotPositiveDefinite(
        "matrix in batch is not strictly positive definite", index=idx
    )


def batched_quad_logdet(S, h):
    """Return ``h^T S^{-1} h`` and ``log|S|`` for stacks of SPD ``S``.

    ``S`` has shape ``(..., n, n)`` and ``h`` shape ``(..., n)``.
    """
    L = batched_cholesky(S)
    w = np.linalg.solve(L, h[..., None])[..., 0]
    quad = np.einsum("...i,...i->...", w, w)
    ld = 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)
    return quad, ld
