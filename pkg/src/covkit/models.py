"""Closed-form space-time and nonstationary covariance models.

Space-time models live on R^(d+1) with points ``(space..., time)`` and are
translation invariant. Nonstationary models take location-dependent
matrices ``S_x`` (batched callables ``(..., d) -> (..., d, d)``) and scalar
maps ``(..., d) -> (...)``; see :mod:`covkit.maps` for named builtins.

Expectations over a random scale ``V`` go through
:func:`covkit.mixtures.mixture_from_law`, which uses closed forms where
available and deterministic quadrature otherwise. Nothing here samples.
"""

import math

import numpy as np
from scipy import special

from . import linalg
from .errors import DimensionMismatch, ParamOutOfRange
from .kernels import CrossCovKernel
from .mixtures import MixingLaw, Weight, matern_correlation, mixture_from_law

__all__ = [
    "cox_isham",
    "moving_average_cov",
    "moving_average_general",
    "single_process_Q",
    "single_process_exponents",
    "single_process_cov",
    "example14_model",
    "stein_matern",
    "stein_cauchy",
    "rotation_z",
    "cyclone_kernel",
]


def _split(x, y, d):
    return x[..., :d] - y[..., :d], x[..., d] - y[..., d]


def _solve(A, b):
    A, b = np.broadcast_arrays(A, b[..., None])
    return np.linalg.solve(A, b)[..., 0]


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _logdet(S):
    L = linalg.batched_cholesky(S)
    return 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)


def cox_isham(mu, D, phi, name="cox-isham"):
    """Frozen-field rainfall covariance with Gaussian random wind.

    ``C(h, u) = |I + u^2 D|^(-1/2) phi(sqrt((h - u mu)^T (I + u^2 D)^{-1} (h - u mu)))``,
    the closed form of ``E phi(||h - V u||)`` for ``V ~ N(mu, D / 2)``.
    """
    mu = np.asarray(mu, dtype=float)
    D = linalg.symmetrize(D)
    d = mu.shape[0]
    if D.shape != (d, d):
        raise DimensionMismatch("D must be d x d with d = len(mu)")
    linalg.cholesky(D)
    eye = np.eye(d)

    def func(x, y):
        h, u = _split(x, y, d)
        S = eye + (u * u)[..., None, None] * D
        r = h - u[..., None] * mu
        S, r = np.broadcast_to(S, r.shape[:-1] + S.shape[-2:]), r
        quad, ld = linalg.batched_quad_logdet(S, r)
        return (phi(np.sqrt(np.maximum(quad, 0.0))) * np.exp(-0.5 * ld))[..., None, None]

    return CrossCovKernel(func, d + 1, 1, translation_invariant=True, name=name)


def _check_law(law):
    return MixingLaw("point") if law is None else law


def moving_average_cov(A, z, law=None, name="moving-average"):
    """Moving average over a field of temporal processes, random scale ``V``.

    ``C(h, u) = |I + 2B|^(-1/2) E_V exp(-V [||h||^2/2 + (z^T h + u)^2 (1 - 2 h^T A (I + 2B)^{-1} A h)])``
    with ``B = A h h^T A``. ``law`` defaults to ``V = 1``.
    """
    A = linalg.symmetrize(A)
    z = np.asarray(z, dtype=float)
    d = A.shape[0]
    if z.shape != (d,):
        raise DimensionMismatch("z must have length d")
    law = _check_law(law)
    eye = np.eye(d)

    def func(x, y):
        h, u = _split(x, y, d)
        a = h @ A
        I2B = eye + 2.0 * a[..., :, None] * a[..., None, :]
        shrink = 1.0 - 2.0 * _dot(a, _solve(I2B, a))
        Q = 0.5 * _dot(h, h) + (h @ z + u) ** 2 * shrink
        ld = _logdet(I2B)
        return (np.exp(-0.5 * ld) * mixture_from_law(law, np.maximum(Q, 0.0)))[..., None, None]

    return CrossCovKernel(func, d + 1, 1, translation_invariant=True, name=name)


def moving_average_general(A, z, M, name="moving-average-M"):
    """Moving average with Gaussian taper ``exp(-v^T M v)`` and ``V = 1``.

    ``C(h, u) = (|M| / |M + 2B|)^(1/2) exp(-c + h^T D (2M + 4B)^{-1} D h)``
    with ``c = (h^T A h + z^T h + u)^2 + h^T M h`` and
    ``D = 2B + M + 2 (u + z^T h) A``. ``M`` only induces a geometric
    anisotropy of the identity-taper model.
    """
    A = linalg.symmetrize(A)
    M = linalg.symmetrize(M)
    z = np.asarray(z, dtype=float)
    d = A.shape[0]
    ldM = linalg.logdet(linalg.cholesky(M))

    def func(x, y):
        h, u = _split(x, y, d)
        a = h @ A
        B = a[..., :, None] * a[..., None, :]
        zh = h @ z
        c = (_dot(h, a) + zh + u) ** 2 + _dot(h, h @ M)
        Dmat = 2.0 * B + M + 2.0 * (u + zh)[..., None, None] * A
        Dh = np.einsum("...ij,...j->...i", Dmat, h)
        expo = -c + _dot(Dh, _solve(2.0 * M + 4.0 * B, Dh))
        ld = _logdet(M + 2.0 * B)
        return np.exp(0.5 * (ldM - ld) + expo)[..., None, None]

    return CrossCovKernel(func, d + 1, 1, translation_invariant=True, name=name)


def _sp_parts(x, y, S, Mq, z, xi2):
    h = x - y
    Sx, Sy = np.asarray(S(x), float), np.asarray(S(y), float)
    c = -(h @ z) + np.asarray(xi2(x), float) - np.asarray(xi2(y), float)
    Mh = h @ Mq
    m = _dot(h, Mh)
    A = Sx + Sy + 4.0 * Mh[..., :, None] * Mh[..., None, :]
    left = np.einsum("...ij,...j->...i", Sx + 2.0 * (m + c)[..., None, None] * Mq, h)
    right = np.einsum("...ij,...j->...i", Sy + 2.0 * (m - c)[..., None, None] * Mq, h)
    return h, Sx, Sy, c, m, A, left, right


def single_process_Q(x, y, S, Mq, z, xi2):
    """Exponent ``Q(x, y)`` of the single-process model.

    ``Q = c^2 - m^2 + h^T (S_x + 2(m+c) M) A^{-1} (S_y + 2(m-c) M) h`` with
    ``h = x - y``, ``c = -z^T h + xi2(x) - xi2(y)``, ``m = h^T M h`` and
    ``A = S_x + S_y + 4 M h h^T M``.
    """
    Mq = linalg.symmetrize(Mq, warn=False)
    z = np.asarray(z, dtype=float)
    h, Sx, Sy, c, m, A, left, right = _sp_parts(x, y, S, Mq, z, xi2)
    linalg.batched_cholesky(A)
    return c * c - m * m + _dot(left, _solve(A, right))


def single_process_exponents(x, y, S, Mq, z, xi2):
    """``Q`` by the two completion-of-squares routes (centred at x and at y).

    Returns ``(Q_x, Q_y)``: ``h^T S_y h + (m - c)^2 - mu^T A mu`` with
    ``mu = -A^{-1}(S_y + 2(m - c) M) h`` and
    ``h^T S_x h + (m + c)^2 - nu^T A nu`` with ``nu = A^{-1}(S_x + 2(m + c) M) h``.
    """
    Mq = linalg.symmetrize(Mq, warn=False)
    z = np.asarray(z, dtype=float)
    h, Sx, Sy, c, m, A, left, right = _sp_parts(x, y, S, Mq, z, xi2)
    mu = -_solve(A, right)
    nu = _solve(A, left)
    Amu = np.einsum("...ij,...j->...i", A, mu)
    Anu = np.einsum("...ij,...j->...i", A, nu)
    qa = _dot(h, np.einsum("...ij,...j->...i", Sy, h)) + (m - c) ** 2 - _dot(mu, Amu)
    qb = _dot(h, np.einsum("...ij,...j->...i", Sx, h)) + (m + c) ** 2 - _dot(nu, Anu)
    return qa, qb


def single_process_cov(S, Mq, z, xi2, d, law=None, weight_param=None, name="single-process"):
    """Covariance of the single temporal process construction.

    ``C(x, y) = 2^(d/2) |S_x|^(1/4) |S_y|^(1/4) |A|^(-1/2) E_V g(V, x) g(V, y) exp(-V Q(x, y))``.

    Parameters
    ----------
    S : callable
        ``(..., d) -> (..., d, d)``, strictly positive definite values.
    Mq : (d, d) array
        Symmetric matrix of the quadratic time shift.
    z : (d,) array
    xi2 : callable
        ``(..., d) -> (...)``.
    law : MixingLaw, optional
        Law of ``V`` and the kind of ``g``; defaults to ``V = 1, g = 1``.
    weight_param : callable, optional
        ``(..., d) -> (...)``, location-dependent parameter of ``g``
        (``nu(x)`` or ``delta(x)``). Defaults to the law's constant weight.
    """
    Mq = linalg.symmetrize(Mq)
    z = np.asarray(z, dtype=float)
    if Mq.shape != (d, d) or z.shape != (d,):
        raise DimensionMismatch("Mq must be d x d and z of length d")
    law = _check_law(law)

    def func(x, y):
        h, Sx, Sy, c, m, A, left, right = _sp_parts(x, y, S, Mq, z, xi2)
        Q = c * c - m * m + _dot(left, _solve(A, right))
        pre = 0.5 * d * math.log(2.0) + 0.25 * (_logdet(Sx) + _logdet(Sy)) - 0.5 * _logdet(A)
        if weight_param is None:
            ev = mixture_from_law(law, np.maximum(Q, 0.0))
        else:
            px, py = weight_param(x), weight_param(y)
            lx = MixingLaw(law.kind, Weight(law.weight.kind, px), law.atom)
            ev = mixture_from_law(lx, np.maximum(Q, 0.0), Weight(law.weight.kind, py))
        return (np.exp(pre) * ev)[..., None, None]

    return CrossCovKernel(func, d, 1, name=name)


def example14_model(L, z, nu, name="example14"):
    """Explicit Whittle-Matern space-time model on R^(d+1).

    With ``c = u - z^T h`` and ``D = I + L h h^T L``:
    ``C(h, u) = |D|^(-1/2) W_nu(sqrt(Q))``,
    ``Q = c^2 - (h^T L h)^2 + h^T (D + c L) D^{-1} (D - c L) h``,
    which simplifies to ``||h||^2 + c^2 / (1 + ||L h||^2)``.
    """
    if not nu > 0:
        raise ParamOutOfRange("nu must be positive")
    L = linalg.symmetrize(L)
    z = np.asarray(z, dtype=float)
    d = L.shape[0]
    eye = np.eye(d)

    def func(x, y):
        h, u = _split(x, y, d)
        c = u - h @ z
        a = h @ L
        D = eye + a[..., :, None] * a[..., None, :]
        cL = c[..., None, None] * L
        left = np.einsum("...ij,...j->...i", D + cL, h)
        right = np.einsum("...ij,...j->...i", D - cL, h)
        Q = c * c - _dot(h, a) ** 2 + _dot(left, _solve(D, right))
        ld = _logdet(D)
        return (np.exp(-0.5 * ld) * matern_correlation(np.sqrt(np.maximum(Q, 0.0)), nu))[..., None, None]

    return CrossCovKernel(func, d + 1, 1, translation_invariant=True, name=name)


def _harmonic_parts(Sx, Sy, h):
    """``Q = h^T S_x (S_x + S_y)^{-1} S_y h`` and the log prefactor."""
    T = Sx + Sy
    Q = _dot(np.einsum("...ij,...j->...i", Sx, h), _solve(T, np.einsum("...ij,...j->...i", Sy, h)))
    d = h.shape[-1]
    logpre = 0.5 * d * math.log(2.0) + 0.25 * (_logdet(Sx) + _logdet(Sy)) - 0.5 * _logdet(T)
    return np.maximum(Q, 0.0), logpre


def stein_matern(S, nu, d, name="stein-matern"):
    """Nonstationary Matern with location-dependent smoothness ``nu(x)``.

    ``C = 2^(d/2) |S_x|^(1/4) |S_y|^(1/4) Gamma(nbar) / sqrt(|S_x+S_y| Gamma(nu_x) Gamma(nu_y)) W_nbar(sqrt(Q))``
    with ``nbar = (nu_x + nu_y) / 2``.
    """

    def func(x, y):
        vx, vy = np.asarray(nu(x), float), np.asarray(nu(y), float)
        if np.any(vx <= 0) or np.any(vy <= 0):
            raise ParamOutOfRange("nu(x) must be positive")
        Q, logpre = _harmonic_parts(np.asarray(S(x), float), np.asarray(S(y), float), x - y)
        nb = 0.5 * (vx + vy)
        lg = special.gammaln(nb) - 0.5 * (special.gammaln(vx) + special.gammaln(vy))
        return (np.exp(logpre + lg) * matern_correlation(np.sqrt(Q), nb))[..., None, None]

    return CrossCovKernel(func, d, 1, name=name)


def stein_cauchy(S, delta, d, normalize=True, name="stein-cauchy"):
    """Nonstationary Cauchy-type model with exponent ``delta(x)``.

    ``C = 2^(d/2) |S_x|^(1/4) |S_y|^(1/4) |S_x+S_y|^(-1/2) (1 + Q)^(-dbar)``,
    ``dbar = (delta_x + delta_y) / 2``, multiplied by
    ``Gamma(dbar) / sqrt(Gamma(delta_x) Gamma(delta_y))`` when ``normalize``
    is set. The factor is 1 for constant ``delta`` and makes the model the
    exact mixture ``E g(V,x) g(V,y) exp(-V Q)`` over a standard exponential
    ``V`` with ``g(v, x) = v^((delta(x)-1)/2) / sqrt(Gamma(delta(x)))``.
    """

    def func(x, y):
        dx, dy = np.asarray(delta(x), float), np.asarray(delta(y), float)
        if np.any(dx <= 0) or np.any(dy <= 0):
            raise ParamOutOfRange("delta(x) must be positive")
        Q, logpre = _harmonic_parts(np.asarray(S(x), float), np.asarray(S(y), float), x - y)
        db = 0.5 * (dx + dy)
        val = logpre - db * np.log1p(Q)
        if normalize:
            val = val + special.gammaln(db) - 0.5 * (special.gammaln(dx) + special.gammaln(dy))
        return np.exp(val)[..., None, None]

    return CrossCovKernel(func, d, 1, name=name)


def rotation_z(angle):
    """Rotation matrices about the third axis, batched over ``angle``."""
    c, s = np.cos(angle), np.sin(angle)
    R = np.zeros(np.shape(angle) + (3, 3))
    R[..., 0, 0], R[..., 0, 1] = c, -s
    R[..., 1, 0], R[..., 1, 1] = s, c
    R[..., 2, 2] = 1.0
    return R


def cyclone_kernel(A, alpha, nu, name="cyclone"):
    """Rotating Matern field on R^3.

    ``R(x)`` rotates about the third axis by ``alpha x_3``;
    ``S_x = I + w w^T`` with ``w = R(x)^T A^T x``; the lag is
    ``h = R(x)^T x - R(y)^T y`` and
    ``C = 2^(3/2) |S_x|^(1/4) |S_y|^(1/4) |S_x + S_y|^(-1/2) W_nu(sqrt(h^T S_x (S_x+S_y)^{-1} S_y h))``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise DimensionMismatch("A must be 3 x 3")
    if not nu > 0:
        raise ParamOutOfRange("nu must be positive")
    eye = np.eye(3)

    def warp(x):
        RT = np.swapaxes(rotation_z(alpha * x[..., 2]), -1, -2)
        w = np.einsum("...ij,...j->...i", RT, x @ A)
        S = eye + w[..., :, None] * w[..., None, :]
        return np.einsum("...ij,...j->...i", RT, x), S

    def func(x, y):
        px, Sx = warp(x)
        py, Sy = warp(y)
        Q, logpre = _harmonic_parts(Sx, Sy, px - py)
        return (np.exp(logpre) * matern_correlation(np.sqrt(Q), nu))[..., None, None]

    return CrossCovKernel(func, 3, 1, name=name)
