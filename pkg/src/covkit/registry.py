"""Model registry: JSON configuration documents to kernels.

A configuration is ``{"model": key, "params": {...}}`` with an optional
``"design"`` block of default point-design settings for the PD harness
and an optional free-text ``"description"``. Unknown keys are rejected at
every level. Matrices are row-major nested arrays, mixtures are
``{"family": ..., <parameters>}``, mixing laws are
``{"kind": ..., "weight": {"kind": ..., "param": ...}, "atom": ...}`` and
location-dependent maps are ``{"builtin": ..., <parameters>}``.
"""

import json

import numpy as np

from . import constructions, kernels, maps, models
from .errors import CovkitError, NotPositiveDefinite
from .mixtures import MixingLaw, ScaleMixture, Weight

__all__ = ["ConfigError", "MODELS", "build", "load_config", "parse_config",
           "shipped_configs", "counterexample_configs", "harness_config"]


class ConfigError(CovkitError, ValueError):
    """A configuration document does not match the registry schema."""


REQUIRED = object()


def _fields(doc, schema, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    out = {}
    for key, (parse, default) in schema.items():
        if key in doc:
            try:
                out[key] = parse(doc[key])
            except ConfigError as exc:
                raise ConfigError(f"{where}.{key}: {exc}") from exc
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where}.{key}: {exc}") from exc
        elif default is REQUIRED:
            raise ConfigError(f"{where}: missing required key {key!r}")
        else:
            out[key] = default
    return out


def _num(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return float(v)


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise ConfigError(f"expected true/false, got {v!r}")
    return v


def _str(v):
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}")
    return v


def _array(ndim):
    def parse(v):
        a = np.asarray(v, dtype=float)
        if a.ndim != ndim:
            raise ConfigError(f"expected a {ndim}-d array, got shape {a.shape}")
        return a
    return parse


_vec, _mat, _mat3 = _array(1), _array(2), _array(3)


def _square(v):
    a = _mat(v)
    if a.shape[0] != a.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {a.shape}")
    return a


_MIXTURE_FIELDS = {
    "gaussian": {},
    "stable": {"alpha": (_num, REQUIRED)},
    "cauchy": {"alpha": (_num, REQUIRED), "beta": (_num, REQUIRED)},
    "matern": {"nu": (_num, REQUIRED)},
}


def _mixture(doc):
    if not isinstance(doc, dict) or doc.get("family") not in _MIXTURE_FIELDS:
        raise ConfigError(f"mixture needs family in {sorted(_MIXTURE_FIELDS)}")
    schema = {"family": (_str, REQUIRED), **_MIXTURE_FIELDS[doc["family"]]}
    return ScaleMixture(**_fields(doc, schema, "mixture"))


def _weight(doc):
    f = _fields(doc, {"kind": (_str, "one"), "param": (_num, 1.0)}, "weight")
    return Weight(f["kind"], f["param"])


def _law(doc):
    f = _fields(doc, {"kind": (_str, REQUIRED), "weight": (_weight, Weight()),
                      "atom": (_num, 1.0)}, "law")
    return MixingLaw(f["kind"], f["weight"], f["atom"])


def _builtin(table, kind):
    def parse(doc):
        if not isinstance(doc, dict) or doc.get("builtin") not in table:
            raise ConfigError(f"{kind} map needs builtin in {sorted(table)}")
        factory, schema = table[doc["builtin"]]
        params = _fields(doc, {"builtin": (_str, REQUIRED), **schema}, f"{kind} map")
        params.pop("builtin")
        return lambda d: factory(d, **params)
    return parse


_MATRIX_MAPS = {
    "constant": (lambda d, matrix: maps.constant_matrix(matrix), {"matrix": (_square, REQUIRED)}),
    "quadratic": (lambda d, c0, c1: maps.quadratic_matrix(c0, c1, d),
                  {"c0": (_num, REQUIRED), "c1": (_num, REQUIRED)}),
    "sinusoidal": (lambda d, c0, c1: maps.sinusoidal_matrix(c0, c1, d),
                   {"c0": (_num, REQUIRED), "c1": (_num, REQUIRED)}),
}
_SCALAR_MAPS = {
    "constant": (lambda d, value: maps.constant_scalar(value), {"value": (_num, REQUIRED)}),
    "linear": (lambda d, coef, offset: maps.linear_scalar(coef, offset),
               {"coef": (_vec, REQUIRED), "offset": (_num, 0.0)}),
    "quadratic": (lambda d, c0, c1: maps.quadratic_scalar(c0, c1),
                  {"c0": (_num, REQUIRED), "c1": (_num, REQUIRED)}),
    "sinusoidal": (lambda d, c0, c1: maps.sinusoidal_scalar(c0, c1),
                   {"c0": (_num, REQUIRED), "c1": (_num, REQUIRED)}),
}
_VECTOR_MAPS = {
    "identity": (lambda d: maps.identity_vector(), {}),
    "projection": (lambda d, k: maps.projection_vector(k), {"k": (_int, REQUIRED)}),
    "linear": (lambda d, matrix: maps.linear_vector(matrix), {"matrix": (_mat, REQUIRED)}),
    "sine": (lambda d, scale: maps.sine_vector(scale), {"scale": (_num, 1.0)}),
}
_matrix_map = _builtin(_MATRIX_MAPS, "matrix")
_scalar_map = _builtin(_SCALAR_MAPS, "scalar")
_vector_map = _builtin(_VECTOR_MAPS, "vector")


def _variogram(doc):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "fractal":
        f = _fields(doc, {"kind": (_str, REQUIRED), "a": (_num, REQUIRED),
                          "b": (_num, REQUIRED), "M0": (_square, None)}, "G")
        return ("fractal", f)
    if kind == "psi-time":
        f = _fields(doc, {"kind": (_str, REQUIRED), "a": (_num, REQUIRED),
                          "b": (_num, REQUIRED)}, "G")
        return ("psi-time", f)
    raise ConfigError("G needs kind 'fractal' or 'psi-time'")


def _product_cov(doc):
    f = _fields(doc, {"kind": (_str, REQUIRED), "f": (_vector_map, REQUIRED)}, "neg_cov")
    if f["kind"] != "product":
        raise ConfigError("neg_cov supports kind 'product'")
    return f["f"]


def _latent_cov(doc):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "mixture":
        f = _fields(doc, {"kind": (_str, REQUIRED), "phi": (_mixture, REQUIRED),
                          "scale": (_num, 1.0)}, "G")
    elif kind == "separable":
        f = _fields(doc, {"kind": (_str, REQUIRED), "phi": (_mixture, REQUIRED),
                          "M0": (_square, REQUIRED), "scale": (_num, 1.0)}, "G")
    else:
        raise ConfigError("G needs kind 'mixture' or 'separable'")
    return f


# --- builders -----------------------------------------------------------------


def _gneiting_general(p):
    M = p["M"]
    m = M.shape[0]
    H = p["H"](p["d"]) if p["H"] is not None else None
    G = neg = None
    if p["G"] is not None and p["neg_cov"] is not None:
        raise ConfigError("give either G or neg_cov")
    if p["G"] is not None:
        kind, f = p["G"]
        if kind == "fractal":
            M0 = np.eye(m) if f["M0"] is None else f["M0"]
            G = constructions.scaled_variogram(
                constructions.fractal_variogram(f["a"], f["b"], p["d"] or m), M0)
        else:
            G = constructions.time_psi_variogram(constructions.power_psi(f["a"], f["b"]), m)
    if p["neg_cov"] is not None:
        d = p["d"] or m
        neg = kernels.product_kernel(p["neg_cov"](d), d, m)
    return constructions.gneiting_general(p["phi"], M, G, H, neg_cov=neg, d=p["d"])


def _moving_average(p):
    if p["M"] is not None:
        if p["law"] is not None and p["law"].kind != "point":
            raise ConfigError("a general taper M supports only V = 1")
        return models.moving_average_general(p["A"], p["z"], p["M"])
    return models.moving_average_cov(p["A"], p["z"], p["law"])


def _single_process(p):
    d = p["d"]
    wp = p["weight_param"](d) if p["weight_param"] is not None else None
    return models.single_process_cov(p["S"](d), p["Mq"], p["z"], p["xi2"](d), d,
                                     law=p["law"], weight_param=wp)


def _multivariate(p):
    g = p["G"]
    d = p["M"].shape[0]
    if g["kind"] == "mixture":
        G = kernels.mixture_kernel(g["phi"], d, g["scale"])
    else:
        G = kernels.separable_kernel(g["phi"], g["M0"], d, g["scale"])
    return constructions.multivariate_kernel(p["phi"], p["M"], G, p["A_list"])


def _difference(p):
    if p["view"] not in ("joint", "slice"):
        raise ConfigError("view must be 'joint' or 'slice'")
    model = constructions.difference_model(p["M1"], p["M2"], p["B1"], p["B2"], p["b"])
    return model.kernel if p["view"] == "joint" else model.slice_kernel


MODELS = {
    "gneiting-general": (
        "phi(sqrt(dH^T (M + G)^-1 dH)) / sqrt|M + G| for a variogram G or -G a covariance",
        {"phi": (_mixture, REQUIRED), "M": (_square, REQUIRED), "d": (_int, None),
         "G": (_variogram, None), "neg_cov": (_product_cov, None), "H": (_vector_map, None)},
        _gneiting_general,
    ),
    "gneiting-classic": (
        "space-time psi(u^2)^(-d/2) phi(|h| / sqrt psi(u^2)) with psi(t) = (t^a + 1)^b",
        {"phi": (_mixture, REQUIRED), "psi": (lambda v: _fields(
            v, {"a": (_num, REQUIRED), "b": (_num, REQUIRED)}, "psi"), REQUIRED),
         "d": (_int, REQUIRED)},
        lambda p: constructions.gneiting_classic(
            p["phi"], constructions.power_psi(p["psi"]["a"], p["psi"]["b"]), p["d"]),
    ),
    "cox-isham": (
        "frozen-field rainfall model with Gaussian random wind N(mu, D/2)",
        {"mu": (_vec, REQUIRED), "D": (_square, REQUIRED), "phi": (_mixture, REQUIRED)},
        lambda p: models.cox_isham(p["mu"], p["D"], p["phi"]),
    ),
    "moving-average": (
        "moving average of temporal processes with random scale V",
        {"A": (_square, REQUIRED), "z": (_vec, REQUIRED), "law": (_law, None),
         "M": (_square, None)},
        _moving_average,
    ),
    "single-process": (
        "nonstationary covariance driven by a single temporal process",
        {"d": (_int, REQUIRED), "S": (_matrix_map, REQUIRED), "Mq": (_square, REQUIRED),
         "z": (_vec, REQUIRED), "xi2": (_scalar_map, REQUIRED), "law": (_law, None),
         "weight_param": (_scalar_map, None)},
        _single_process,
    ),
    "example14": (
        "explicit Whittle-Matern space-time model with quadratic time shift",
        {"L": (_square, REQUIRED), "z": (_vec, REQUIRED), "nu": (_num, REQUIRED)},
        lambda p: models.example14_model(p["L"], p["z"], p["nu"]),
    ),
    "stein-matern": (
        "nonstationary Matern with varying smoothness nu(x)",
        {"d": (_int, REQUIRED), "S": (_matrix_map, REQUIRED), "nu": (_scalar_map, REQUIRED)},
        lambda p: models.stein_matern(p["S"](p["d"]), p["nu"](p["d"]), p["d"]),
    ),
    "stein-cauchy": (
        "nonstationary Cauchy-type model with varying exponent delta(x)",
        {"d": (_int, REQUIRED), "S": (_matrix_map, REQUIRED), "delta": (_scalar_map, REQUIRED),
         "normalize": (_bool, True)},
        lambda p: models.stein_cauchy(p["S"](p["d"]), p["delta"](p["d"]), p["d"],
                                      normalize=p["normalize"]),
    ),
    "cyclone": (
        "rotating Matern field on R^3",
        {"A": (_square, REQUIRED), "alpha": (_num, REQUIRED), "nu": (_num, REQUIRED)},
        lambda p: models.cyclone_kernel(p["A"], p["alpha"], p["nu"]),
    ),
    "multivariate": (
        "m-variate cross covariance from a latent l-variate covariance G",
        {"phi": (_mixture, REQUIRED), "M": (_square, REQUIRED), "G": (_latent_cov, REQUIRED),
         "A_list": (_mat3, REQUIRED)},
        _multivariate,
    ),
    "difference": (
        "difference of two Gaussian-mixture terms on R^(2d); view 'slice' gives C(x-y, x, y)",
        {"M1": (_square, REQUIRED), "M2": (_square, REQUIRED), "B1": (_square, REQUIRED),
         "B2": (_square, REQUIRED), "b": (_num, REQUIRED), "view": (_str, "joint")},
        _difference,
    ),
    "isotropic": (
        "motion-invariant kernel phi(|h| / scale)",
        {"phi": (_mixture, REQUIRED), "d": (_int, REQUIRED), "scale": (_num, 1.0)},
        lambda p: kernels.mixture_kernel(p["phi"], p["d"], p["scale"]),
    ),
    "exp-abs-counterexample": (
        "bivariate exp*(-M |h|); indefinite whenever M has equal diagonal and M12 < M11",
        {"d": (_int, 1), "M": (_square, REQUIRED)},
        lambda p: kernels.exp_abs_counterexample(p["d"], p["M"]),
    ),
}


_DESIGN = {
    "sampler": (_str, "uniform"),
    "bounds": (lambda v: tuple(float(b) for b in _vec(v)), (-2.0, 2.0)),
    "scale": (_num, 1.0),
    "spacing": (_num, 0.5),
}


def parse_config(doc):
    """Validate a configuration document; returns ``(key, params, design)``."""
    f = _fields(doc, {"model": (_str, REQUIRED), "params": (lambda v: v, {}),
                      "design": (lambda v: _fields(v, _DESIGN, "design"), None),
                      "description": (_str, "")}, "config")
    key = f["model"]
    if key not in MODELS:
        raise ConfigError(f"unknown model {key!r}; known: {sorted(MODELS)}")
    _, schema, _ = MODELS[key]
    params = _fields(f["params"], schema, f"params[{key}]")
    design = f["design"] or _fields({}, _DESIGN, "design")
    return key, params, design


def build(doc):
    """Construct the kernel described by a configuration document."""
    key, params, _ = parse_config(doc)
    try:
        return MODELS[key][2](params)
    except ConfigError:
        raise
    except (ValueError, TypeError, NotPositiveDefinite) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def harness_config(doc, d, seed=0, **overrides):
    """PD harness settings from a config's design block plus explicit overrides."""
    from .validation import PdHarnessConfig

    _, _, design = parse_config(doc)
    settings = dict(design, d=d, seed=seed)
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return PdHarnessConfig(**settings)


# --- shipped example parameters -------------------------------------------------

_WIND_PARAMS = {"mu": [1.0, 1.0], "D": [[1.0, 0.5], [0.5, 1.0]], "phi": {"family": "matern", "nu": 1.0}}
_MA_PARAMS = {"A": [[0.5, 0.0], [0.0, 1.0]], "z": [2.0, 0.0],
         "law": {"kind": "frechet", "weight": {"kind": "matern", "param": 1.0}}}
_CYCLONE_PARAMS = {"A": [[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]], "alpha": -6.283185307179586,
         "nu": 1.0}

_SHIPPED = {
    "isotropic-gaussian": {"model": "isotropic",
                           "params": {"phi": {"family": "gaussian"}, "d": 2}},
    "gneiting-general": {
        "model": "gneiting-general",
        "params": {"phi": {"family": "matern", "nu": 1.5}, "M": [[1.0, 0.3], [0.3, 1.0]],
                   "G": {"kind": "fractal", "a": 1.0, "b": 0.5,
                         "M0": [[1.0, 0.5], [0.5, 1.0]]}}},
    "gneiting-general-product": {
        "model": "gneiting-general",
        "params": {"phi": {"family": "cauchy", "alpha": 1.0, "beta": 2.0},
                   "M": [[1.0, 0.0], [0.0, 1.0]],
                   "neg_cov": {"kind": "product", "f": {"builtin": "sine", "scale": 0.5}}}},
    "gneiting-classic": {
        "model": "gneiting-classic",
        "params": {"phi": {"family": "cauchy", "alpha": 1.0, "beta": 2.0},
                   "psi": {"a": 0.75, "b": 0.5}, "d": 2}},
    "cox-isham": {"model": "cox-isham", "params": _WIND_PARAMS},
    "moving-average": {"model": "moving-average", "params": _MA_PARAMS},
    "single-process": {
        "model": "single-process",
        "params": {"d": 1, "S": {"builtin": "quadratic", "c0": 2.0, "c1": 1.0},
                   "Mq": [[0.3]], "z": [0.2], "xi2": {"builtin": "linear", "coef": [1.0]}}},
    "example14": {"model": "example14",
                  "params": {"L": [[0.5, 0.0], [0.0, 1.0]], "z": [1.0, 0.0], "nu": 1.0}},
    "stein-matern": {
        "model": "stein-matern",
        "params": {"d": 1, "S": {"builtin": "sinusoidal", "c0": 2.0, "c1": 1.0},
                   "nu": {"builtin": "sinusoidal", "c0": 1.0, "c1": 0.5}}},
    "stein-cauchy": {
        "model": "stein-cauchy",
        "params": {"d": 2, "S": {"builtin": "quadratic", "c0": 1.0, "c1": 0.5},
                   "delta": {"builtin": "sinusoidal", "c0": 1.0, "c1": 0.5}}},
    "cyclone": {"model": "cyclone", "params": _CYCLONE_PARAMS,
                "design": {"bounds": [0.0, 1.0]}},
    "multivariate": {
        "model": "multivariate",
        "params": {"phi": {"family": "gaussian"}, "M": [[2.0, 0.0], [0.0, 2.0]],
                   "G": {"kind": "mixture", "phi": {"family": "gaussian"}},
                   "A_list": [[[1.0, 0.0]], [[0.0, 1.0]]]}},
    "difference": {
        "model": "difference",
        "params": {"M1": [[1.0]], "M2": [[1.0]], "B1": [[4.0]], "B2": [[1.0]], "b": -0.5}},
}

_COUNTEREXAMPLES = {
    "exp-abs-counterexample": {"model": "exp-abs-counterexample", "params": {"d": 1, "M": [[1.0, 0.5], [0.5, 1.0]]}},
    "difference-below-bound": {
        "model": "difference",
        "params": {"M1": [[1.0]], "M2": [[1.0]], "B1": [[4.0]], "B2": [[1.0]], "b": -0.6}},
}


def shipped_configs():
    """Valid example configurations keyed by file stem."""
    return json.loads(json.dumps(_SHIPPED))


def counterexample_configs():
    """Negative-control configurations keyed by file stem."""
    return json.loads(json.dumps(_COUNTEREXAMPLES))

