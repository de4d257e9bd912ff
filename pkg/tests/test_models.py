import math

import numpy as np
import pytest
from scipy import integrate, special

from covkit import kernels, maps, mixtures, models
from covkit.errors import DimensionMismatch, ParamOutOfRange
from covkit.mixtures import MixingLaw, Weight

RNG = np.random.default_rng(30)
MU = np.array([1.0, 1.0])
D = np.array([[1.0, 0.5], [0.5, 1.0]])
A_MA = np.array([[0.5, 0.0], [0.0, 1.0]])
Z_MA = np.array([2.0, 0.0])
FRECHET_W1 = MixingLaw("frechet", Weight("matern", 1.0))


def matern(t, nu):
    t = np.asarray(t, float)
    with np.errstate(invalid="ignore"):
        val = 2 ** (1 - nu) / math.gamma(nu) * t**nu * special.kv(nu, t)
    return np.where(t == 0, 1.0, val)


def lam_ok(K, pts, tol=1e-8):
    rep = kernels.assess(K, pts)
    return rep.lambda_min >= -tol * max(rep.lambda_max, 1.0)


# --- Cox-Isham -------------------------------------------------------------------

@pytest.mark.parametrize("phi", [mixtures.gaussian(), mixtures.whittle_matern(1.0),
                                 mixtures.generalized_cauchy(1.0, 2.0)], ids=["gauss", "matern", "cauchy"])
def test_cox_isham_zero_time_lag(phi):
    K = models.cox_isham(MU, D, phi)
    h = RNG.normal(size=(20, 2))
    x = np.concatenate([h, np.zeros((20, 1))], -1)
    assert np.allclose(K(x, np.zeros(3))[..., 0, 0], phi(np.linalg.norm(h, axis=-1)), rtol=1e-14)


@pytest.mark.parametrize("u", [0.3, -1.0, 2.5])
def test_cox_isham_advection_ridge(u):
    phi = mixtures.whittle_matern(1.0)
    K = models.cox_isham(MU, D, phi)
    x = np.concatenate([u * MU, [u]])
    ref = 1.0 / math.sqrt(np.linalg.det(np.eye(2) + u * u * D))
    assert K(x, np.zeros(3))[0, 0] == pytest.approx(ref, rel=1e-14)


def test_cox_isham_gaussian_expectation_1d():
    # E exp(-(h - V u)^2), V ~ N(mu, D/2), integrated directly
    mu, Dv = 0.7, 1.3
    K = models.cox_isham([mu], [[Dv]], mixtures.gaussian())
    for h, u in [(0.2, 0.5), (-1.0, 1.5), (2.0, -0.8)]:
        sd = math.sqrt(Dv / 2)
        f = lambda v: math.exp(-(h - v * u) ** 2) * math.exp(-0.5 * ((v - mu) / sd) ** 2) / (
            sd * math.sqrt(2 * math.pi))
        ref, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14)
        assert K(np.array([h, u]), np.zeros(2))[0, 0] == pytest.approx(ref, abs=1e-12)


def test_cox_isham_shipped_pd():
    K = models.cox_isham(MU, D, mixtures.whittle_matern(1.0))
    assert lam_ok(K, RNG.uniform(-2, 2, size=(40, 3)))


def test_cox_isham_shape_errors():
    with pytest.raises(DimensionMismatch):
        models.cox_isham([1.0, 1.0], np.eye(3), mixtures.gaussian())


# --- moving average ----------------------------------------------------------------

def test_moving_average_zero_space_lag():
    K = models.moving_average_cov(A_MA, Z_MA, FRECHET_W1)
    for u in (0.0, 0.4, 2.0):
        x = np.array([0.0, 0.0, u])
        assert K(x, np.zeros(3))[0, 0] == pytest.approx(float(matern(abs(u), 1.0)), abs=1e-10)


def test_moving_average_point_law_zero_space_lag():
    K = models.moving_average_cov(A_MA, Z_MA)
    for u in (0.0, 0.4, 2.0):
        assert K(np.array([0.0, 0.0, u]), np.zeros(3))[0, 0] == pytest.approx(math.exp(-u * u),
                                                                              rel=1e-14)


def test_moving_average_null_direction():
    # A h = 0 and u = -z^T h leave only the exp(-||h||^2/2) term
    A = np.array([[1.0, 0.0], [0.0, 0.0]])
    z = np.array([0.5, 1.5])
    K = models.moving_average_cov(A, z, FRECHET_W1)
    for s in (0.5, 1.0, 3.0):
        h = np.array([0.0, s])
        x = np.concatenate([h, [-z @ h]])
        assert K(x, np.zeros(3))[0, 0] == pytest.approx(float(matern(s / math.sqrt(2), 1.0)),
                                                        abs=1e-10)


def test_moving_average_general_identity_taper_matches_literal():
    a = models.moving_average_cov(A_MA, Z_MA)
    b = models.moving_average_general(A_MA, Z_MA, np.eye(2))
    x = RNG.normal(size=(50, 3))
    assert np.max(np.abs(a(x, np.zeros(3)) - b(x, np.zeros(3)))) <= 1e-14


def test_moving_average_defining_integral_1d():
    # C(h,u) = (2/pi)^{1/2} int exp(-v^2 - (v+h)^2) exp(-(f(v) - f(v+h) - u)^2) dv
    a, z = 0.4, 0.7
    f = lambda v: a * v * v + z * v
    K = models.moving_average_cov([[a]], [z])
    for h, u in [(0.3, 0.1), (-0.8, 1.0), (1.5, -0.4)]:
        g = lambda v: math.exp(-v * v - (v + h) ** 2 - (f(v) - f(v + h) - u) ** 2)
        ref = math.sqrt(2 / math.pi) * integrate.quad(g, -np.inf, np.inf, epsabs=1e-14)[0]
        assert K(np.array([h, u]), np.zeros(2))[0, 0] == pytest.approx(ref, abs=1e-12)


def test_moving_average_shipped_pd():
    K = models.moving_average_cov(A_MA, Z_MA, FRECHET_W1)
    assert lam_ok(K, RNG.uniform(-2, 2, size=(30, 3)))


# --- single process ----------------------------------------------------------------

def two_eye(d):
    return maps.constant_matrix(2 * np.eye(d))


def zero_scalar(x):
    return np.zeros(np.shape(x)[:-1])


def test_single_process_q_diagonal_zero():
    S = maps.quadratic_matrix(1.0, 0.5, 2)
    x = RNG.normal(size=(10, 2))
    Q = models.single_process_Q(x, x, S, [[0.2, 0.1], [0.1, -0.3]], [0.5, 1.0],
                                maps.sinusoidal_scalar(0.0, 1.0))
    assert np.all(Q == 0.0)


def test_single_process_q_c_zero_is_squared_norm():
    for _ in range(20):
        Mq = RNG.normal(size=(2, 2))
        Mq = Mq + Mq.T
        x, y = RNG.normal(size=(2, 2))
        Q = models.single_process_Q(x, y, two_eye(2), Mq, np.zeros(2), zero_scalar)
        assert Q == pytest.approx(np.sum((x - y) ** 2), abs=1e-12)


def test_single_process_q_without_shift():
    S = maps.quadratic_matrix(1.0, 0.5, 2)
    xi2 = maps.sinusoidal_scalar(0.0, 1.0)
    z = np.array([0.3, -0.6])
    for _ in range(20):
        x, y = RNG.normal(size=(2, 2))
        h = x - y
        Sx, Sy = S(x), S(y)
        c = -(z @ h) + xi2(x) - xi2(y)
        harmonic = h @ Sx @ np.linalg.solve(Sx + Sy, Sy @ h)
        inv_form = h @ np.linalg.solve(np.linalg.inv(Sx) + np.linalg.inv(Sy), h)
        assert harmonic == pytest.approx(inv_form, abs=1e-12)
        Q = models.single_process_Q(x, y, S, np.zeros((2, 2)), z, xi2)
        assert Q == pytest.approx(harmonic + c * c, abs=1e-12)


def test_single_process_q_routes_agree():
    S = maps.quadratic_matrix(1.0, 0.7, 2)
    xi2 = maps.sinusoidal_scalar(0.0, 1.0)
    Mq = np.array([[0.4, -0.2], [-0.2, 0.1]])
    z = np.array([1.0, -0.5])
    x, y = RNG.normal(size=(2, 100, 2))
    Q = models.single_process_Q(x, y, S, Mq, z, xi2)
    qa, qb = models.single_process_exponents(x, y, S, Mq, z, xi2)
    assert np.max(np.abs(qa - Q)) < 1e-10
    assert np.max(np.abs(qb - Q)) < 1e-10
    assert np.max(np.abs(models.single_process_Q(y, x, S, Mq, z, xi2) - Q)) < 1e-10


def test_single_process_all_simplifications():
    # S = 2, M = 0, z = 0, xi2 = 0, V = 1: Q = (x-y)^2 and the prefactor is 1
    K = models.single_process_cov(two_eye(1), [[0.0]], [0.0], zero_scalar, 1)
    x, y = RNG.normal(size=(2, 20, 1))
    assert np.allclose(K(x, y)[..., 0, 0], np.exp(-((x - y)[:, 0] ** 2)), rtol=1e-14)


@pytest.mark.parametrize("nu", [0.5, 1.0])
def test_single_process_frechet_c_zero(nu):
    law = MixingLaw("frechet", Weight("matern", nu))
    K = models.single_process_cov(two_eye(2), [[0.3, 0.1], [0.1, 0.5]], np.zeros(2), zero_scalar,
                                  2, law=law)
    Mq = np.array([[0.3, 0.1], [0.1, 0.5]])
    for _ in range(10):
        x, y = RNG.normal(size=(2, 2))
        h = x - y
        Mh = Mq @ h
        ref = matern(np.linalg.norm(h), nu) / math.sqrt(np.linalg.det(np.eye(2) + np.outer(Mh, Mh)))
        assert K(x, y)[0, 0] == pytest.approx(float(ref), abs=1e-7)


def test_single_process_diagonal_is_weight_moment():
    law = MixingLaw("exponential", Weight("power", 1.0))
    K = models.single_process_cov(maps.quadratic_matrix(1.0, 1.0, 2), np.zeros((2, 2)),
                                  np.zeros(2), zero_scalar, 2, law=law,
                                  weight_param=maps.sinusoidal_scalar(1.0, 0.5))
    x = RNG.normal(size=(5, 2))
    # E V^(delta-1) = Gamma(delta) for a standard exponential V
    delta = maps.sinusoidal_scalar(1.0, 0.5)(x)
    assert np.allclose(K(x, x)[..., 0, 0], special.gamma(delta), rtol=1e-9)


def test_single_process_symmetric_and_pd():
    S = maps.quadratic_matrix(2.0, 1.0, 1)
    K = models.single_process_cov(S, [[0.3]], [0.2], maps.linear_scalar([1.0]), 1)
    x, y = RNG.normal(size=(2, 30, 1))
    assert np.max(np.abs(K(x, y) - K(y, x))) <= 1e-12
    assert lam_ok(K, RNG.uniform(-2, 2, size=(25, 1)))


def test_single_process_shape_errors():
    with pytest.raises(DimensionMismatch):
        models.single_process_cov(two_eye(2), np.zeros((1, 1)), np.zeros(2), zero_scalar, 2)


# --- example 14 ----------------------------------------------------------------------

L14 = np.diag([0.5, 1.0])
Z14 = np.array([1.0, 0.0])


def test_example14_zero_space_lag():
    K = models.example14_model(L14, Z14, 1.0)
    for u in (0.0, 0.5, 2.0):
        assert K(np.array([0.0, 0.0, u]), np.zeros(3))[0, 0] == pytest.approx(
            float(matern(u, 1.0)), rel=1e-13)


def test_example14_no_shear():
    K = models.example14_model(np.zeros((2, 2)), Z14, 1.5)
    h = RNG.normal(size=(10, 2))
    x = np.concatenate([h, (h @ Z14)[:, None]], -1)
    assert np.allclose(K(x, np.zeros(3))[..., 0, 0], matern(np.linalg.norm(h, axis=-1), 1.5),
                       rtol=1e-13)


def test_example14_simplified_exponent():
    K = models.example14_model(L14, Z14, 1.0)
    x = RNG.normal(size=(30, 3))
    h, u = x[:, :2], x[:, 2]
    Lh = h @ L14
    Q = np.sum(h * h, -1) + (u - h @ Z14) ** 2 / (1 + np.sum(Lh * Lh, -1))
    ref = matern(np.sqrt(Q), 1.0) / np.sqrt(1 + np.sum(Lh * Lh, -1))
    assert np.allclose(K(x, np.zeros(3))[..., 0, 0], ref, rtol=1e-12)


def test_example14_pd():
    K = models.example14_model(L14, Z14, 1.0)
    assert lam_ok(K, RNG.uniform(-2, 2, size=(30, 3)))


def test_example14_rejects_nu():
    with pytest.raises(ParamOutOfRange):
        models.example14_model(L14, Z14, 0.0)


# --- Stein models --------------------------------------------------------------------

def test_stein_matern_unit_diagonal():
    K = models.stein_matern(two_eye(2), maps.constant_scalar(1.5), 2)
    x = RNG.normal(size=(10, 2))
    assert np.allclose(K(x, x)[..., 0, 0], 1.0, rtol=1e-14)


def test_stein_matern_constant_is_matern():
    K = models.stein_matern(two_eye(2), maps.constant_scalar(1.5), 2)
    x, y = RNG.normal(size=(2, 10, 2))
    assert np.allclose(K(x, y)[..., 0, 0], matern(np.linalg.norm(x - y, axis=-1), 1.5),
                       rtol=1e-13)


def test_stein_cauchy_scalar_arithmetic():
    K = models.stein_cauchy(two_eye(1), maps.constant_scalar(1.0), 1)
    x, y = RNG.normal(size=(2, 10, 1))
    assert np.allclose(K(x, y)[..., 0, 0], 1.0 / (1.0 + (x - y)[:, 0] ** 2), rtol=1e-14)


def test_stein_cauchy_matches_exponential_mixture():
    S = maps.quadratic_matrix(1.0, 0.5, 1)
    delta = maps.sinusoidal_scalar(1.0, 0.5)
    K = models.stein_cauchy(S, delta, 1)
    for x, y in RNG.normal(size=(5, 2, 1)):
        Sx, Sy = S(x)[0, 0], S(y)[0, 0]
        Q = (x - y)[0] ** 2 * Sx * Sy / (Sx + Sy)
        dx, dy = float(delta(x)), float(delta(y))
        moment = integrate.quad(lambda v: v ** ((dx + dy) / 2 - 1) * math.exp(-v * (1 + Q)),
                                0, np.inf)[0] / math.sqrt(math.gamma(dx) * math.gamma(dy))
        pre = math.sqrt(2) * (Sx * Sy) ** 0.25 / math.sqrt(Sx + Sy)
        assert K(x, y)[0, 0] == pytest.approx(pre * moment, rel=1e-9)


def test_stein_matern_variable_smoothness_pd():
    nu = lambda x: 1.0 + 0.5 * np.sin(x[..., 0]) ** 2
    S = lambda x: (2.0 + np.cos(x[..., 0]) ** 2)[..., None, None] * np.eye(1)
    K = models.stein_matern(S, nu, 1)
    assert lam_ok(K, RNG.uniform(-2, 2, size=(25, 1)))


def test_stein_rejects_nonpositive_parameter():
    K = models.stein_matern(two_eye(1), maps.constant_scalar(-1.0), 1)
    with pytest.raises(ParamOutOfRange):
        K(np.zeros(1), np.ones(1))


# --- cyclone -------------------------------------------------------------------------

A_CY = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])


def test_cyclone_unit_diagonal():
    K = models.cyclone_kernel(A_CY, -2 * math.pi, 1.0)
    x = RNG.uniform(0, 1, size=(20, 3))
    assert np.allclose(K(x, x)[..., 0, 0], 1.0, rtol=1e-13)


def test_cyclone_zero_a():
    alpha = 1.3
    K = models.cyclone_kernel(np.zeros((3, 3)), alpha, 1.0)
    x, y = RNG.uniform(0, 1, size=(2, 20, 3))
    RT = lambda p: np.swapaxes(models.rotation_z(alpha * p[..., 2]), -1, -2)
    h = np.einsum("...ij,...j->...i", RT(x), x) - np.einsum("...ij,...j->...i", RT(y), y)
    ref = matern(np.linalg.norm(h, axis=-1) / math.sqrt(2), 1.0)
    assert np.allclose(K(x, y)[..., 0, 0], ref, rtol=1e-13)


def test_rotation_is_orthogonal():
    R = models.rotation_z(np.array([0.3, -2.0]))
    assert np.allclose(R @ np.swapaxes(R, -1, -2), np.eye(3), atol=1e-15)
    assert np.allclose(models.rotation_z(math.pi / 2) @ [1.0, 0, 0], [0, 1.0, 0], atol=1e-15)


def test_cyclone_shipped_pd():
    K = models.cyclone_kernel(A_CY, -2 * math.pi, 1.0)
    for seed in range(5):
        pts = np.random.default_rng(seed).uniform(0, 1, size=(30, 3))
        assert lam_ok(K, pts)


def test_cyclone_shape_errors():
    with pytest.raises(DimensionMismatch):
        models.cyclone_kernel(np.eye(2), 1.0, 1.0)
    with pytest.raises(ParamOutOfRange):
        models.cyclone_kernel(A_CY, 1.0, -1.0)
