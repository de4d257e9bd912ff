import numpy as np
import pytest

from covkit import constructions, kernels, maps, mixtures
from covkit.errors import NotPositiveDefinite, ParamOutOfRange
from covkit.kernels import INDEFINITE
from covkit.validation import PdHarnessConfig, gneiting_embedding, run_pd_harness

RNG = np.random.default_rng(20)


def lam_ok(K, pts, tol=1e-8):
    rep = kernels.assess(K, pts)
    return rep.lambda_min >= -tol * max(rep.lambda_max, 1.0)


def test_gneiting_general_zero_g_is_mixture():
    phi = mixtures.whittle_matern(1.5)
    K = constructions.gneiting_general(phi, np.eye(2), d=2)
    x, y = RNG.normal(size=(2, 20, 2))
    assert np.allclose(K(x, y)[..., 0, 0], phi(np.linalg.norm(x - y, axis=-1)), rtol=1e-14)
    assert K.is_translation_invariant


def test_gneiting_general_diagonal():
    phi = mixtures.gaussian()
    G = constructions.scaled_variogram(constructions.fractal_variogram(1, 0.5, 2),
                                       [[1.0, 0.2], [0.2, 1.0]])
    M = np.array([[2.0, 0.3], [0.3, 1.0]])
    K = constructions.gneiting_general(phi, M, G)
    x = np.array([0.4, -1.0])
    assert K(x, x)[0, 0] == pytest.approx(1 / np.sqrt(np.linalg.det(M)), rel=1e-14)


@pytest.mark.parametrize("phi, a, b", [
    (mixtures.generalized_cauchy(1.0, 2.0), 0.75, 0.5),
    (mixtures.gaussian(), 1.0, 0.5),
    (mixtures.whittle_matern(0.5), 0.5, 1.0),
])
def test_general_contains_classic(phi, a, b):
    psi = constructions.power_psi(a, b)
    classic = constructions.gneiting_classic(phi, psi, 2)
    general = gneiting_embedding(phi, psi, 2)
    x, y = RNG.uniform(-2, 2, size=(2, 50, 3))
    assert np.max(np.abs(classic(x, y) - general(x, y))) <= 1e-12


def test_negative_g_branch_uses_covariance():
    f = maps.sine_vector(0.5)
    K = kernels.product_kernel(f, 2, 2)
    C = constructions.gneiting_general(mixtures.gaussian(), np.eye(2), neg_cov=K)
    x, y = RNG.normal(size=(2, 2))
    S = np.eye(2) - np.outer(f(x), f(y))
    h = x - y
    ref = np.exp(-h @ np.linalg.solve(S, h)) / np.sqrt(np.linalg.det(S))
    assert C(x, y)[0, 0] == pytest.approx(ref, rel=1e-13)
    assert C(x, y)[0, 0] == pytest.approx(C(y, x)[0, 0], rel=1e-13)
    assert lam_ok(C, RNG.uniform(-2, 2, size=(25, 2)))


def test_gneiting_general_raises_when_not_spd():
    K = kernels.constant_kernel(1, [[2.0]])
    C = constructions.gneiting_general(mixtures.gaussian(), [[1.0]], neg_cov=K)
    with pytest.raises(NotPositiveDefinite):
        kernels.gram(C, [[0.0], [1.0]])


def test_classic_examples():
    phi = mixtures.gaussian()
    flat = constructions.gneiting_classic(phi, lambda t: np.ones_like(t), 2)
    x, y = RNG.normal(size=(2, 10, 3))
    assert np.allclose(flat(x, y)[..., 0, 0], phi(np.linalg.norm(x[:, :2] - y[:, :2], axis=-1)))
    psi = constructions.power_psi(1.0, 0.5)
    K = constructions.gneiting_classic(phi, psi, 2)
    u = np.array([0.0, 0.0, 1.3])
    assert K(u, np.zeros(3))[0, 0] == pytest.approx(psi(1.3**2) ** -1.0, rel=1e-14)
    assert lam_ok(K, RNG.uniform(-2, 2, size=(40, 3)))


def test_power_psi_range():
    with pytest.raises(ParamOutOfRange):
        constructions.power_psi(1.5, 0.5)


def test_fractal_variogram_examples():
    g = constructions.fractal_variogram(2.0, 1.0, 2)
    x, y = RNG.normal(size=(2, 10, 2))
    assert np.allclose(g(x, y)[..., 0, 0], np.sum((x - y) ** 2, axis=-1), rtol=1e-13)
    assert g(x[0], x[0])[0, 0] == 0.0
    with pytest.raises(ParamOutOfRange):
        constructions.fractal_variogram(2.5, 0.5)


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_fractal_schoenberg(r):
    g = constructions.fractal_variogram(1.0, 0.5, 2)
    K = kernels.CrossCovKernel(lambda x, y: np.exp(-r * g(x, y)), 2, 1)
    assert lam_ok(K, RNG.uniform(-2, 2, size=(20, 2)))


def test_stein_kernel_examples():
    phi = mixtures.gaussian()
    K = constructions.stein_kernel(phi, maps.constant_matrix([[0.5]]), 1)
    x, y = RNG.normal(size=(2, 10, 1))
    assert np.allclose(K(x, y)[..., 0, 0], np.exp(-((x - y)[:, 0] ** 2)), rtol=1e-14)
    f = maps.quadratic_matrix(1.0, 1.0, 2)
    K2 = constructions.stein_kernel(mixtures.whittle_matern(1.0), f, 2)
    p = np.array([0.3, 0.4])
    assert K2(p, p)[0, 0] == pytest.approx(1 / np.sqrt(np.linalg.det(2 * f(p))), rel=1e-14)
    assert lam_ok(K2, RNG.uniform(-2, 2, size=(30, 2)))


def test_stein_constant_equals_general():
    F0 = np.array([[0.8, 0.2], [0.2, 0.5]])
    phi = mixtures.whittle_matern(1.0)
    a = constructions.stein_kernel(phi, maps.constant_matrix(F0), 2)
    b = constructions.gneiting_general(phi, 2 * F0, d=2)
    x, y = RNG.normal(size=(2, 30, 2))
    assert np.max(np.abs(a(x, y) - b(x, y))) <= 1e-12


BASE = dict(M1=[[1.0]], M2=[[1.0]], B1=[[4.0]], B2=[[1.0]])


def test_difference_bound_and_flags():
    m = constructions.difference_model(b=-0.5, **BASE)
    assert m.bound == pytest.approx(-0.5, rel=1e-15)
    assert m.admissible
    assert not constructions.difference_model(b=-0.6, **BASE).admissible
    assert constructions.difference_model(b=0.0, **BASE).admissible
    admissible, kernel = constructions.difference_model(b=0.3, **BASE)
    assert admissible and kernel.d == 2


def test_difference_b_zero_is_first_term():
    m = constructions.difference_model(b=0.0, **BASE)
    x, y = RNG.normal(size=(2, 10, 2))
    h, dl = x[:, 0] - y[:, 0], x[:, 1] - y[:, 1]
    S = 1.0 + 4.0 * dl**2
    assert np.allclose(m.kernel(x, y)[..., 0, 0], np.exp(-h**2 / S) / np.sqrt(S), rtol=1e-14)


def test_difference_rejects_non_spd():
    with pytest.raises(ParamOutOfRange):
        constructions.difference_model([[1.0]], [[-1.0]], [[4.0]], [[1.0]], 0.0)


def test_difference_sharp_bound():
    cfg = PdHarnessConfig(d=2, n_points=30, n_repetitions=20, seed=0)
    at_bound = constructions.difference_model(b=-0.5, **BASE)
    beyond = constructions.difference_model(b=-0.5 * 1.2, **BASE)
    assert run_pd_harness(at_bound.kernel, cfg).verdict != INDEFINITE
    rep = run_pd_harness(beyond.kernel, cfg)
    assert rep.verdict == INDEFINITE
    assert rep.lambda_min < -1e-6


def test_multivariate_zero_a():
    phi = mixtures.gaussian()
    M = np.array([[1.5, 0.2], [0.2, 0.8]])
    G = kernels.mixture_kernel(phi, 2)
    K = constructions.multivariate_kernel(phi, M, G, np.zeros((3, 1, 2)))
    x, y = RNG.normal(size=(2, 2))
    h = x - y
    ref = np.exp(-h @ np.linalg.solve(M, h)) / np.sqrt(np.linalg.det(M))
    assert np.allclose(K(x, y), ref * np.ones((3, 3)), rtol=1e-14)


def test_multivariate_pd_and_exact_transpose():
    K = constructions.multivariate_kernel(
        mixtures.gaussian(), 2 * np.eye(2), kernels.mixture_kernel(mixtures.gaussian(), 2),
        [[[1.0, 0.0]], [[0.0, 1.0]]])
    pts = RNG.uniform(-2, 2, size=(15, 2))
    assert kernels.gram(K, pts).shape == (30, 30)
    assert lam_ok(K, pts)
    x, y = RNG.normal(size=(2, 40, 2))
    assert np.array_equal(K(x, y), np.swapaxes(K(y, x), -1, -2))


def test_multivariate_single_variate_matches_general():
    phi = mixtures.whittle_matern(1.0)
    A1 = np.array([[0.6, 0.3]])
    M = np.array([[1.2, 0.1], [0.1, 0.9]])
    mv = constructions.multivariate_kernel(phi, M, kernels.mixture_kernel(mixtures.gaussian(), 2),
                                           [A1])
    gvar = kernels.CrossVariogram(
        lambda a, b: (1.0 - np.exp(-np.sum((a - b) ** 2, axis=-1)))[..., None, None], 2, 1)
    gg = constructions.gneiting_general(phi, M - A1.T @ A1, kernels.congruence(A1.T, gvar))
    x, y = RNG.normal(size=(2, 30, 2))
    assert np.max(np.abs(mv(x, y) - gg(x, y))) <= 1e-12


@pytest.mark.parametrize("d", [1, 2, 3])
def test_constructions_pass_harness(d):
    phi = mixtures.whittle_matern(1.0)
    cfg = PdHarnessConfig(d=d, n_points=25, n_repetitions=20, seed=d)
    M0 = np.eye(d)
    G = constructions.scaled_variogram(constructions.fractal_variogram(1.0, 0.5, d), M0)
    for K in (constructions.gneiting_general(phi, np.eye(d), G),
              constructions.stein_kernel(phi, maps.quadratic_matrix(0.5, 0.5, d), d)):
        assert run_pd_harness(K, cfg).verdict != INDEFINITE
