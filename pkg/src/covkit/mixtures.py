"""Normal scale mixtures and their mixing laws.

A normal scale mixture is a function ``phi(t) = int exp(-a t^2) dF(a)`` for
a nonnegative measure ``F``. The families shipped here are the Gaussian,
stable, generalized Cauchy and Whittle-Matern models, each normalized so
that ``phi(0) = 1``.

The second half of the module handles random scales ``V`` entering
covariances through ``E_V g(V, x) g(V, y) exp(-V Q)``. Those expectations
have closed forms for the classical law/weight pairings and fall back to
adaptive quadrature otherwise; the quadrature path doubles as the oracle
for the closed forms.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
from scipy import special

from .errors import DomainError, ParamOutOfRange, QuadratureNoConvergence

__all__ = [
    "ScaleMixture",
    "gaussian",
    "stable",
    "generalized_cauchy",
    "whittle_matern",
    "eval_mixture",
    "bessel_k",
    "matern_correlation",
    "log_gamma",
    "Weight",
    "MixingLaw",
    "mixture_from_law",
]

FAMILIES = ("gaussian", "stable", "cauchy", "matern")


@dataclass(frozen=True)
class ScaleMixture:
    """A normalized normal scale mixture ``phi`` with ``phi(0) == 1``.

    Parameters
    ----------
    family : {"gaussian", "stable", "cauchy", "matern"}
    alpha : float
        Shape for the stable and generalized Cauchy families, in ``(0, 2]``.
    beta : float
        Tail parameter of the generalized Cauchy family, ``> 0``.
    nu : float
        Smoothness of the Whittle-Matern family, ``> 0``.
    """

    family: str
    alpha: float = 2.0
    beta: float = 1.0
    nu: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParamOutOfRange(f"unknown mixture family {self.family!r}")
        if self.family in ("stable", "cauchy") and not 0 < self.alpha <= 2:
            raise ParamOutOfRange(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.family == "cauchy" and not self.beta > 0:
            raise ParamOutOfRange(f"beta must be positive, got {self.beta}")
        if self.family == "matern" and not self.nu > 0:
            raise ParamOutOfRange(f"nu must be positive, got {self.nu}")

    def __call__(self, t):
        return eval_mixture(self, t)

    def to_dict(self):
        params = {
            "gaussian": {},
            "stable": {"alpha": self.alpha},
            "cauchy": {"alpha": self.alpha, "beta": self.beta},
            "matern": {"nu": self.nu},
        }[self.family]
        return {"family": self.family, **params}


def gaussian():
    return ScaleMixture("gaussian")


def stable(alpha):
    return ScaleMixture("stable", alpha=alpha)


def generalized_cauchy(alpha, beta):
    return ScaleMixture("cauchy", alpha=alpha, beta=beta)


def whittle_matern(nu):
    return ScaleMixture("matern", nu=nu)


def log_gamma(x):
    return special.gammaln(x)


def bessel_k(nu, x):
    """Modified Bessel function of the second kind ``K_nu(x)`` for real ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("bessel_k requires x > 0")
    return special.kv(nu, x)


def matern_correlation(t, nu):
    """Whittle-Matern correlation ``2^(1-nu) / Gamma(nu) * t^nu K_nu(t)``.

    ``nu`` broadcasts against ``t``. The value at ``t = 0`` is exactly 1.
    Evaluated in log space with the exponentially scaled Bessel function so
    large arguments underflow cleanly to zero.
    """
    t = np.asarray(t, dtype=float)
    nu = np.asarray(nu, dtype=float)
    t, nu = np.broadcast_arrays(t, nu)
    out = np.ones(t.shape)
    pos = t > 0
    if np.any(pos):
        tp, nup = t[pos], nu[pos]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            logval = (
                (1.0 - nup) * math.log(2.0)
                - special.gammaln(nup)
                + nup * np.log(tp)
                + np.log(special.kve(nup, tp))
                - tp
            )
            val = np.exp(logval)
        # K_nu overflows only when t^(2 nu) is far below double precision,
        # where the correlation is 1 to working accuracy
        val = np.where(np.isfinite(val), val, 1.0)
        out[pos] = np.minimum(val, 1.0)
    return out


def eval_mixture(phi, t):
    """Evaluate a scale mixture at ``t >= 0`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("scale mixtures are evaluated at t >= 0")
    if phi.family == "gaussian":
        return np.exp(-t * t)
    if phi.family == "stable":
        return np.exp(-(t**phi.alpha))
    if phi.family == "cauchy":
        return (1.0 + t**phi.alpha) ** (-phi.beta / phi.alpha)
    return matern_correlation(t, phi.nu)


# --- random scales ---------------------------------------------------------

WEIGHTS = ("one", "matern", "power")
LAWS = ("frechet", "exponential", "point")


@dataclass(frozen=True)
class Weight:
    """Weight function ``g(v)`` multiplying a random scale.

    ``"one"``: ``g = 1``; ``"matern"``: ``g = (2 sqrt v)^(1-nu) / sqrt(Gamma(nu))``
    with ``param = nu``; ``"power"``: ``g = v^((delta-1)/2)`` with
    ``param = delta``. ``param`` may be an array when a weight varies with
    location.
    """

    kind: str = "one"
    param: object = 1.0

    def __post_init__(self):
        if self.kind not in WEIGHTS:
            raise ParamOutOfRange(f"unknown weight {self.kind!r}")
        if self.kind != "one" and np.any(np.asarray(self.param) <= 0):
            raise ParamOutOfRange(f"{self.kind} weight parameter must be positive")

    def log(self, v):
        return self.log_at(np.log(np.asarray(v, dtype=float)))

    def log_at(self, s):
        """``log g(e^s)``, written in ``s`` so that extreme scales stay finite."""
        s = np.asarray(s, dtype=float)
        p = np.asarray(self.param, dtype=float)
        if self.kind == "one":
            return np.zeros(np.broadcast_shapes(s.shape, p.shape))
        if self.kind == "matern":
            return (1.0 - p) * (math.log(2.0) + 0.5 * s) - 0.5 * special.gammaln(p)
        return 0.5 * (p - 1.0) * s


@dataclass(frozen=True)
class MixingLaw:
    """Distribution of a positive random scale ``V`` with a weight ``g``.

    ``"frechet"`` has ``P(V <= v) = exp(-1/(4v))``, ``"exponential"`` is the
    standard exponential law and ``"point"`` puts all mass at ``atom``.
    """

    kind: str = "point"
    weight: Weight = Weight()
    atom: float = 1.0

    def __post_init__(self):
        if self.kind not in LAWS:
            raise ParamOutOfRange(f"unknown mixing law {self.kind!r}")
        if self.kind == "point" and not self.atom > 0:
            raise ParamOutOfRange("point mass must sit at a positive value")

    def log_density(self, v):
        v = np.asarray(v, dtype=float)
        return self.log_density_at(np.log(v)) - np.log(v)

    def log_density_at(self, s):
        """Log density of ``log V`` at ``s``."""
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            if self.kind == "frechet":
                return -0.25 * np.exp(-s) - math.log(4.0) - s
            if self.kind == "exponential":
                return s - np.exp(s)
        raise ValueError("point mass has no density")


def _closed_form(law, Q, w1, w2):
    """Closed-form ``E g1(V) g2(V) exp(-V Q)`` or None if unavailable."""
    if law.kind == "point":
        a = law.atom
        return np.exp(w1.log(a) + w2.log(a) - a * Q)
    if w1.kind != w2.kind:
        return None
    p = 0.5 * (np.asarray(w1.param, float) + np.asarray(w2.param, float))
    if law.kind == "frechet" and w1.kind in ("matern", "one"):
        if w1.kind == "one":
            return matern_correlation(np.sqrt(Q), 1.0)
        logratio = special.gammaln(p) - 0.5 * (
            special.gammaln(w1.param) + special.gammaln(w2.param)
        )
        return np.exp(logratio) * matern_correlation(np.sqrt(Q), p)
    if law.kind == "exponential" and w1.kind in ("power", "one"):
        if w1.kind == "one":
            return 1.0 / (1.0 + Q)
        return np.exp(special.gammaln(p) - p * np.log1p(Q))
    return None


def _quadrature_scalar(law, Q, w1, w2, tol):
    def log_f(s):
        with np.errstate(over="ignore", invalid="ignore"):
            val = w1.log_at(s) + w2.log_at(s) + law.log_density_at(s) - Q * np.exp(s)
        return np.where(np.isnan(val), -np.inf, val)

    # locate the mass in s = log v, integrate the core with the peak as a
    # breakpoint and both tails over infinite ranges
    grid = np.linspace(-60.0, 60.0, 4801)
    lg = log_f(grid)
    k = int(np.argmax(lg))
    peak = float(lg[k])
    if not np.isfinite(peak):
        raise QuadratureNoConvergence("integrand vanishes on the search grid")
    keep = np.nonzero(lg > peak - 80.0)[0]
    lo, hi = grid[max(keep[0] - 1, 0)], grid[min(keep[-1] + 1, grid.size - 1)]
    scale = math.exp(peak) if peak < 700 else math.inf
    epsabs = tol / scale

    def f(s):
        return math.exp(float(log_f(s)) - peak)

    pieces = [(lo, hi, [grid[k]]), (-math.inf, lo, None), (hi, math.inf, None)]
    total, total_err = 0.0, 0.0
    for a, b, pts in pieces:
        kw = {"points": pts} if pts is not None else {}
        val, err = scipy.integrate.quad(
            f, a, b, epsabs=epsabs, epsrel=1e-12, limit=500, **kw
        )[:2]
        total += val
        total_err += err
    if not np.isfinite(total) or total_err * scale > max(tol, 1e-10 * abs(total) * scale):
        raise QuadratureNoConvergence(
            f"quadrature error estimate {total_err * scale:.3g} exceeds tolerance"
        )
    return total * scale


def mixture_from_law(law, Q, other=None, *, method="auto", tol=1e-11):
    """Expectation ``E_V g(V) g'(V) exp(-V Q)`` for ``Q >= 0``.

    Parameters
    ----------
    law : MixingLaw
        Law of ``V`` together with the weight ``g``.
    Q : float or array
    other : Weight, optional
        Second weight ``g'``; defaults to ``law.weight`` so that the result
        is ``E g(V)^2 exp(-V Q)``.
    method : {"auto", "closed", "quadrature"}
        ``"auto"`` uses a closed form when one is known for the law/weight
        pairing and quadrature otherwise.
    """
    Q = np.asarray(Q, dtype=float)
    if np.any(Q < 0):
        raise DomainError("Q must be nonnegative")
    w1 = law.weight
    w2 = law.weight if other is None else other
    if method in ("auto", "closed"):
        val = _closed_form(law, Q, w1, w2)
        if val is not None:
            return val
        if method == "closed":
            raise ValueError(f"no closed form for {law.kind} law with {w1.kind} weight")
    if law.kind == "point":
        return _closed_form(law, Q, w1, w2)
    p1 = np.asarray(w1.param, float)
    p2 = np.asarray(w2.param, float)
    Qb, p1b, p2b = np.broadcast_arrays(Q, p1, p2)
    out = np.empty(Qb.shape)
    for idx in np.ndindex(Qb.shape):
        out[idx] = _quadrature_scalar(
            law, float(Qb[idx]),
            Weight(w1.kind, float(p1b[idx])), Weight(w2.kind, float(p2b[idx])), tol,
        )
    return out if out.ndim else float(out)
