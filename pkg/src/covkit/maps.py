"""Named location-dependent maps used to parameterize nonstationary models.

Every factory returns a batched callable: inputs ``(..., d)``, outputs
``(...)`` for scalar maps, ``(..., k)`` for vector maps and ``(..., d, d)``
for matrix maps. The ``spec`` attribute records how the map was built so
configs can be round-tripped.
"""

import numpy as np

from .errors import ParamOutOfRange


def _tag(func, name, **params):
    func.spec = {"builtin": name, **params}
    return func


# --- matrix-valued (strictly positive definite) ---


def constant_matrix(matrix):
    mat = np.asarray(matrix, dtype=float)
    if np.linalg.eigvalsh(0.5 * (mat + mat.T))[0] <= 0:
        raise ParamOutOfRange("constant matrix map must be strictly positive definite")

    def f(x):
        return np.broadcast_to(mat, x.shape[:-1] + mat.shape)

    return _tag(f, "constant", matrix=mat.tolist())


def quadratic_matrix(c0, c1, d):
    """``(c0 + c1 ||x||^2) I``."""
    if not (c0 > 0 and c1 >= 0):
        raise ParamOutOfRange("quadratic matrix map needs c0 > 0, c1 >= 0")
    eye = np.eye(d)

    def f(x):
        return (c0 + c1 * np.sum(x * x, axis=-1))[..., None, None] * eye

    return _tag(f, "quadratic", c0=c0, c1=c1)


def sinusoidal_matrix(c0, c1, d):
    """``(c0 + c1 sum_i cos^2(x_i)) I``."""
    if not (c0 > 0 and c1 >= 0):
        raise ParamOutOfRange("sinusoidal matrix map needs c0 > 0, c1 >= 0")
    eye = np.eye(d)

    def f(x):
        return (c0 + c1 * np.sum(np.cos(x) ** 2, axis=-1))[..., None, None] * eye

    return _tag(f, "sinusoidal", c0=c0, c1=c1)


# --- scalar-valued ---


def constant_scalar(value):
    value = float(value)

    def f(x):
        return np.full(x.shape[:-1], value)

    return _tag(f, "constant", value=value)


def linear_scalar(coef, offset=0.0):
    coef = np.asarray(coef, dtype=float)

    def f(x):
        return offset + x @ coef

    return _tag(f, "linear", coef=coef.tolist(), offset=offset)


def quadratic_scalar(c0, c1):
    def f(x):
        return c0 + c1 * np.sum(x * x, axis=-1)

    return _tag(f, "quadratic", c0=c0, c1=c1)


def sinusoidal_scalar(c0, c1):
    """``c0 + c1 sum_i sin^2(x_i)``."""

    def f(x):
        return c0 + c1 * np.sum(np.sin(x) ** 2, axis=-1)

    return _tag(f, "sinusoidal", c0=c0, c1=c1)


# --- vector-valued ---


def identity_vector():
    return _tag(lambda x: x, "identity")


def projection_vector(k):
    """First ``k`` coordinates."""
    return _tag(lambda x: x[..., :k], "projection", k=k)


def linear_vector(matrix):
    mat = np.asarray(matrix, dtype=float)
    return _tag(lambda x: x @ mat.T, "linear", matrix=mat.tolist())


def sine_vector(scale=1.0):
    """``scale * sin(x)`` coordinatewise; bounded by ``scale`` in each entry."""
    return _tag(lambda x: scale * np.sin(x), "sine", scale=scale)
