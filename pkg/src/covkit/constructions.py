"""Covariances assembled from scale mixtures, variograms and matrices.

The central object is the generalized Gneiting construction

    C(x, y) = phi(sqrt(dH^T (M + G(x, y))^{-1} dH)) / sqrt(|M + G(x, y)|),
    dH = H(x) - H(y),

valid when ``phi`` is a normal scale mixture, ``G`` is a cross variogram
(or ``-G`` a cross covariance) and ``M + G`` stays strictly positive
definite. Positive definiteness of ``M + G`` cannot be checked over an
unbounded domain, so it is checked lazily at every evaluated pair.

Everything that needs ``phi(t^2)`` for a completely monotone ``phi`` (the
classic Gneiting form) is expressed through the scale mixture at ``t``.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NotPositiveDefinite, ParamOutOfRange
from .kernels import CrossCovKernel, CrossVariogram

__all__ = [
    "gneiting_general",
    "gneiting_classic",
    "power_psi",
    "fractal_variogram",
    "scaled_variogram",
    "time_psi_variogram",
    "stein_kernel",
    "DifferenceModel",
    "difference_model",
    "multivariate_kernel",
]


def _bcast(*arrays, core):
    """Broadcast arrays over their leading axes, keeping ``core`` trailing dims."""
    lead = np.broadcast_shapes(*(a.shape[: a.ndim - c] for a, c in zip(arrays, core)))
    return [np.broadcast_to(a, lead + a.shape[a.ndim - c:]) for a, c in zip(arrays, core)]


def _mixture_ratio(phi, S, h):
    S, h = _bcast(S, h, core=(2, 1))
    St = np.swapaxes(S, -1, -2)
    if np.array_equal(S, St):
        quad, ld = linalg.batched_quad_logdet(S, h)
    else:
        # cross variograms need not be symmetric; positive definiteness
        # then refers to the symmetric part, which also forces |S| > 0
        linalg.batched_cholesky(0.5 * (S + St))
        quad = np.einsum("...i,...i->...", h, np.linalg.solve(S, h[..., None])[..., 0])
        ld = np.linalg.slogdet(S)[1]
    return phi(np.sqrt(np.maximum(quad, 0.0))) * np.exp(-0.5 * ld)


def _identity(x):
    return x


def gneiting_general(phi, M, G=None, H=None, *, neg_cov=None, d=None, name="gneiting-general"):
    """Univariate covariance from the generalized Gneiting construction.

    Parameters
    ----------
    phi : ScaleMixture
    M : (m, m) array
        Strictly positive definite.
    G : CrossVariogram, optional
        ``m``-variate cross variogram on R^d.
    H : callable, optional
        Batched map ``(..., d) -> (..., m)``; identity by default (then
        ``m`` must equal ``d``).
    neg_cov : CrossCovKernel, optional
        Alternative to ``G``: a cross covariance ``K`` with ``G = -K``.
    d : int, optional
        Input dimension when neither ``G`` nor ``neg_cov`` is given
        (``G = 0``).

    Raises
    ------
    NotPositiveDefinite
        At evaluation time, when ``M + G(x, y)`` is not strictly positive
        definite for some evaluated pair.
    """
    M = linalg.symmetrize(M)
    m = M.shape[0]
    linalg.cholesky(M)
    if G is not None and neg_cov is not None:
        raise ValueError("pass either G or neg_cov, not both")
    inner = G if G is not None else neg_cov
    sign = -1.0 if neg_cov is not None else 1.0
    if inner is not None:
        if inner.m != m:
            raise DimensionMismatch(f"G is {inner.m}-variate, M is {m}x{m}")
        d = inner.d
    elif d is None:
        d = m
    if H is None:
        if m != d:
            raise DimensionMismatch("identity H needs m == d")
        H = _identity

    def func(x, y):
        dH = np.asarray(H(x), float) - np.asarray(H(y), float)
        S = M if inner is None else M + sign * inner(x, y)
        return _mixture_ratio(phi, S, dH)[..., None, None]

    ti = H is _identity and (inner is None or inner.is_translation_invariant)
    return CrossCovKernel(func, d, 1, translation_invariant=ti, name=name)


def power_psi(a, b):
    """``psi(t) = (t^a + 1)^b``: positive with completely monotone derivative."""
    if not (0 < a <= 1 and 0 < b <= 1):
        raise ParamOutOfRange(f"power psi needs a, b in (0, 1], got a={a}, b={b}")

    def psi(t):
        return (np.asarray(t, float) ** a + 1.0) ** b

    psi.params = {"a": a, "b": b}
    return psi


def gneiting_classic(phi, psi, d, name="gneiting-classic"):
    """Space-time kernel ``psi(u^2)^(-d/2) phi(||h|| / sqrt(psi(u^2)))`` on R^(d+1).

    Points are ``(space..., time)``. ``phi`` is the scale mixture in the
    distance argument, i.e. the completely monotone function of Gneiting's
    class evaluated at ``t^2``.
    """
    if d < 1:
        raise ParamOutOfRange("spatial dimension must be >= 1")

    def func(x, y):
        h = x[..., :d] - y[..., :d]
        u = x[..., d] - y[..., d]
        p = np.asarray(psi(u * u), float)
        if np.any(p <= 0):
            raise ParamOutOfRange("psi must be positive")
        r = np.linalg.norm(h, axis=-1) / np.sqrt(p)
        return (p ** (-0.5 * d) * phi(r))[..., None, None]

    return CrossCovKernel(func, d + 1, 1, translation_invariant=True, name=name)


def fractal_variogram(a, b, d=1):
    """Variogram ``(||h||^a + 1)^b - 1`` for ``a in (0, 2]``, ``b in (0, 1]``."""
    if not (0 < a <= 2 and 0 < b <= 1):
        raise ParamOutOfRange(f"fractal variogram needs a in (0,2], b in (0,1], got {a}, {b}")

    def func(x, y):
        r = np.linalg.norm(x - y, axis=-1)
        return np.expm1(b * np.log1p(r**a))[..., None, None]

    return CrossVariogram(func, d, 1, translation_invariant=True,
                          name=f"fractal(a={a:g},b={b:g})")


def scaled_variogram(gamma, M0):
    """``gamma(x, y) * M0`` for a univariate variogram and a PSD matrix ``M0``."""
    M0 = linalg.symmetrize(M0)
    if not linalg.is_psd(M0):
        raise ParamOutOfRange("M0 must be positive semidefinite")
    return CrossVariogram(
        lambda x, y: gamma(x, y)[..., 0:1, 0:1] * M0, gamma.d, M0.shape[0],
        translation_invariant=gamma.is_translation_invariant,
        name=f"{gamma.name}*M0",
    )


def time_psi_variogram(psi, d):
    """``(psi(|t_x - t_y|^2) - psi(0)) * I_d`` on R^(d+1), points ``(space, time)``.

    Together with ``M = psi(0) I_d`` and ``H`` the spatial projection this
    embeds the classic Gneiting class into the general construction.
    """
    psi0 = float(psi(0.0))
    eye = np.eye(d)

    def func(x, y):
        u = x[..., d] - y[..., d]
        return (np.asarray(psi(u * u), float) - psi0)[..., None, None] * eye

    return CrossVariogram(func, d + 1, d, translation_invariant=True, name="psi-time")


def stein_kernel(phi, f, d, name="stein"):
    """``phi(sqrt(h^T (f(x)+f(y))^{-1} h)) / sqrt(|f(x) + f(y)|)``.

    ``f`` is batched, ``(..., d) -> (..., d, d)``, with strictly positive
    definite values.
    """

    def func(x, y):
        S = np.asarray(f(x), float) + np.asarray(f(y), float)
        return _mixture_ratio(phi, S, x - y)[..., None, None]

    return CrossCovKernel(func, d, 1, name=name)


@dataclass
class DifferenceModel:
    """Two-term difference model together with its admissibility verdict.

    ``kernel`` lives on R^(2d) with points ``(s, x)`` and is translation
    invariant in ``s``; ``slice_kernel`` is the stationary covariance
    ``C(x - y, x, y)`` on R^d.
    """

    admissible: bool
    bound: float
    b: float
    kernel: CrossCovKernel
    slice_kernel: CrossCovKernel

    def __iter__(self):
        return iter((self.admissible, self.kernel))


def difference_model(M1, M2, B1, B2, b):
    """Difference of two Gaussian-mixture terms that may take negative values.

    The model is admissible when ``b >= 0``, or when ``M2 - M1`` and
    ``inv(B2) - inv(B1)`` are positive semidefinite and
    ``b >= -sqrt(|B2| / |B1|)``.
    """
    mats = [linalg.symmetrize(a) for a in (M1, M2, B1, B2)]
    d = mats[0].shape[0]
    if any(a.shape != (d, d) for a in mats):
        raise DimensionMismatch("M1, M2, B1, B2 must all be d x d")
    for label, a in zip(("M1", "M2", "B1", "B2"), mats):
        try:
            linalg.cholesky(a)
        except NotPositiveDefinite as exc:
            raise ParamOutOfRange(f"{label} must be strictly positive definite") from exc
    M1, M2, B1, B2 = mats
    bound = -float(np.sqrt(np.linalg.det(B2) / np.linalg.det(B1)))
    nested = linalg.is_psd(M2 - M1) and linalg.is_psd(np.linalg.inv(B2) - np.linalg.inv(B1))
    admissible = b >= 0 or (nested and b >= bound)
    eye = np.eye(d)

    def term(Mi, Bi, h, delta):
        r = np.einsum("...i,ij,...j->...", delta, Bi, delta)
        S = Mi + r[..., None, None] * eye
        S, hh = _bcast(S, h, core=(2, 1))
        quad, ld = linalg.batched_quad_logdet(S, hh)
        return np.exp(-quad - 0.5 * ld)

    def value(h, delta):
        out = term(M1, B1, h, delta)
        if b != 0:
            out = out + b * term(M2, B2, h, delta)
        return out[..., None, None]

    kernel = CrossCovKernel(
        lambda x, y: value(x[..., :d] - y[..., :d], x[..., d:] - y[..., d:]),
        2 * d, 1, translation_invariant=True, name=f"difference(b={b:g})",
    )
    slice_kernel = CrossCovKernel(
        lambda x, y: value(x - y, x - y), d, 1, translation_invariant=True,
        name=f"difference-slice(b={b:g})",
    )
    return DifferenceModel(admissible, bound, float(b), kernel, slice_kernel)


def _lex_greater(x, y):
    diff = x != y
    first = np.argmax(diff, axis=-1)
    xv = np.take_along_axis(x, first[..., None], axis=-1)[..., 0]
    yv = np.take_along_axis(y, first[..., None], axis=-1)[..., 0]
    return np.any(diff, axis=-1) & (xv > yv)


def multivariate_kernel(phi, M, G, A_list, name="multivariate"):
    """``m``-variate cross covariance from an ``l``-variate kernel ``G``.

    ``C_jk(x, y) = phi(sqrt(h^T S_jk^{-1} h)) / sqrt(|S_jk|)`` with
    ``S_jk = M - sym(A_j^T G(x, y) A_k)`` and ``sym(B) = (B + B^T) / 2``.
    Each ``A_j`` is ``l x d``. Pairs are evaluated in a canonical order so
    that ``C(x, y) == C(y, x).T`` holds bit for bit.
    """
    M = linalg.symmetrize(M)
    d = M.shape[0]
    linalg.cholesky(M)
    A = np.asarray(A_list, dtype=float)
    if A.ndim == 2:
        A = A[:, None, :]
    if A.ndim != 3 or A.shape[1] != G.m or A.shape[2] != d:
        raise DimensionMismatch(f"A_list must have shape (m, {G.m}, {d}), got {A.shape}")
    if G.d != d:
        raise DimensionMismatch(f"G has d={G.d}, M is {d}x{d}")
    m = A.shape[0]

    def ordered(x, y):
        Gxy = G(x, y)
        B = np.einsum("jpa,...pq,kqb->...jkab", A, Gxy, A)
        S = M - 0.5 * (B + np.swapaxes(B, -1, -2))
        h = (x - y)[..., None, None, :]
        return _mixture_ratio(phi, S, h)

    def func(x, y):
        x, y = np.broadcast_arrays(x, y)
        swap = _lex_greater(x, y)[..., None]
        out = ordered(np.where(swap, y, x), np.where(swap, x, y))
        return np.where(swap[..., None], np.swapaxes(out, -1, -2), out)

    return CrossCovKernel(func, d, m, translation_invariant=G.is_translation_invariant,
                          name=name)
