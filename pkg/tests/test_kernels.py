import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covkit import constructions, kernels, mixtures
from covkit.errors import DimensionMismatch
from covkit.kernels import BORDERLINE, INDEFINITE, PD, CrossCovKernel, CrossVariogram

SEP_M = [[1.0, 0.5], [0.5, 1.0]]


def gauss(d=1):
    return kernels.mixture_kernel(mixtures.gaussian(), d)


def shipped_pd_kernels():
    return [
        gauss(2),
        kernels.mixture_kernel(mixtures.whittle_matern(0.5), 2, scale=0.5),
        kernels.mixture_kernel(mixtures.generalized_cauchy(1.0, 3.0), 2),
        kernels.separable_kernel(mixtures.stable(1.2), SEP_M, 2),
    ]


def designs(n_sets, n, d, seed):
    rng = np.random.default_rng(seed)
    return [rng.uniform(-2, 2, size=(n, d)) for _ in range(n_sets)]


def lam_ok(K, pts, tol=1e-8):
    rep = kernels.assess(K, pts)
    return rep.lambda_min >= -tol * max(rep.lambda_max, 1.0)


def test_gram_single_point():
    assert np.array_equal(kernels.gram(gauss(), [[0.0]]), [[1.0]])


def test_gram_far_points_identity():
    G = kernels.gram(gauss(), [[0.0], [100.0]])
    assert np.allclose(G, np.eye(2), rtol=0, atol=1e-15)


def test_gram_separable_block_layout():
    K = kernels.separable_kernel(mixtures.gaussian(), SEP_M, 1)
    pts = np.array([[0.0], [0.5], [1.5]])
    G = kernels.gram(K, pts)
    assert G.shape == (6, 6)
    # point-major: block (p, q) is K(x_p, x_q)
    assert np.allclose(G[2:4, 4:6], math.exp(-1.0) * np.array(SEP_M), rtol=1e-15)
    assert np.min(np.linalg.eigvalsh(G)) > 0


def test_gram_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kernels.gram(gauss(2), np.zeros((3, 3)))


@pytest.mark.parametrize("K", shipped_pd_kernels(), ids=lambda k: k.name)
def test_transpose_and_translation_invariants(K):
    rng = np.random.default_rng(3)
    x, y, v = rng.normal(size=(3, 50, K.d))
    assert np.allclose(K(x, y), np.swapaxes(K(y, x), -1, -2), rtol=0, atol=1e-12)
    assert K.is_translation_invariant
    assert np.allclose(K(x, y), K(x + v, y + v), rtol=0, atol=1e-12)


@pytest.mark.parametrize("K", shipped_pd_kernels(), ids=lambda k: k.name)
def test_gram_unsymmetrized_asymmetry_small(K):
    pts = designs(1, 20, K.d, 4)[0]
    blocks = K(pts[:, None, :], pts[None, :, :])
    raw = blocks.transpose(0, 2, 1, 3).reshape(20 * K.m, 20 * K.m)
    assert np.max(np.abs(raw - raw.T)) < 1e-12
    G = kernels.gram(K, pts)
    assert np.array_equal(G, G.T)


def test_exp_minus_one_examples():
    Z = kernels.comp_exp_minus_one(kernels.zero_kernel(1, 2), 1.0)
    assert np.array_equal(Z(np.zeros(1), np.ones(1)), np.zeros((2, 2)))
    E = kernels.comp_exp_minus_one(gauss(), 1.0)
    assert E(np.zeros(1), np.zeros(1))[0, 0] == pytest.approx(math.e - 1, rel=1e-15)


def test_sinh_examples():
    assert np.array_equal(kernels.comp_sinh(kernels.zero_kernel(1, 2), 1.0)(
        np.zeros(1), np.ones(1)), np.zeros((2, 2)))
    assert kernels.comp_sinh(gauss(), 2.0)(np.zeros(1), np.zeros(1))[0, 0] == pytest.approx(
        math.sinh(2.0), rel=1e-15)


@pytest.mark.parametrize("K", shipped_pd_kernels(), ids=lambda k: k.name)
@pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
def test_entrywise_closure(K, r):
    for pts in designs(20, 10, K.d, 5):
        assert lam_ok(kernels.comp_exp_minus_one(K, r), pts)
        assert lam_ok(kernels.comp_sinh(K, r), pts)


def test_small_r_limit():
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=(2, 100, 2))
    for K in shipped_pd_kernels():
        approx = kernels.comp_exp_minus_one(K, 1e-6)(x, y) / 1e-6
        assert np.max(np.abs(approx - K(x, y))) < 1e-5


def test_recenter_pins_exactly():
    K = kernels.recenter(gauss(2), np.array([0.3, -0.2]))
    z = np.array([0.3, -0.2])
    ys = np.random.default_rng(7).normal(size=(10, 2))
    assert np.all(K(z, ys) == 0.0)
    assert np.all(K(ys, z) == 0.0)
    assert np.all(K(z, z) == 0.0)


def test_recenter_fractal_variogram_pd():
    gamma = constructions.fractal_variogram(1.0, 0.5, 1)
    negcov = CrossCovKernel(lambda x, y: -gamma(x, y), 1, 1, translation_invariant=True)
    K = kernels.recenter(negcov, np.zeros(1))
    assert K(np.zeros(1), np.zeros(1))[0, 0] == 0.0
    pts = np.random.default_rng(8).normal(size=(8, 1))
    assert kernels.assess(K, pts).verdict != INDEFINITE


def test_variogram_to_cov_zero_gives_ones():
    zero = CrossVariogram(lambda x, y: np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1] + (2, 2)),
                          1, 2, translation_invariant=True)
    C = kernels.variogram_to_cov(zero, "C1")
    assert np.array_equal(C(np.ones(1), np.zeros(1)), np.ones((2, 2)))


def test_variogram_to_cov_c2_origin():
    gamma = CrossVariogram(lambda x, y: np.linalg.norm(x - y, axis=-1)[..., None, None], 1, 1,
                           translation_invariant=True)
    C = kernels.variogram_to_cov(gamma, "C2")
    assert C(np.zeros(1), np.zeros(1))[0, 0] == 1.0
    xs = np.linspace(-3, 3, 13)[:, None]
    assert np.all(np.diagonal(C(xs, xs), axis1=-2, axis2=-1) <= 1.0)


@pytest.mark.parametrize("variant", ["C1", "C2"])
def test_variogram_to_cov_bivariate_pd(variant):
    g = constructions.scaled_variogram(constructions.fractal_variogram(1.0, 1.0, 2), SEP_M)
    C = kernels.variogram_to_cov(g, variant)
    pts = np.random.default_rng(9).normal(size=(8, 2))
    assert lam_ok(C, pts)


def test_congruence_identity_and_row():
    K = kernels.separable_kernel(mixtures.gaussian(), SEP_M, 1)
    x, y = np.array([0.2]), np.array([-0.4])
    assert np.array_equal(kernels.congruence(np.eye(2), K)(x, y), K(x, y))
    w = np.array([[1.0, -2.0]])
    Kw = kernels.congruence(w, K)
    assert Kw.m == 1
    assert Kw(x, y)[0, 0] == pytest.approx((w @ K(x, y) @ w.T)[0, 0], rel=1e-15)
    assert isinstance(kernels.congruence(w, constructions.scaled_variogram(
        constructions.fractal_variogram(1, 1), SEP_M)), CrossVariogram)


def test_congruence_random_pd():
    A = np.random.default_rng(10).normal(size=(3, 2))
    K = kernels.congruence(A, kernels.separable_kernel(mixtures.gaussian(), SEP_M, 2))
    pts = np.random.default_rng(11).normal(size=(6, 2))
    assert lam_ok(K, pts)


def test_congruence_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kernels.congruence(np.ones((2, 3)), kernels.separable_kernel(mixtures.gaussian(), SEP_M, 1))


def test_product_kernel_examples():
    ones = kernels.product_kernel(lambda x: np.ones(x.shape[:-1] + (2,)), 1, 2)
    assert np.array_equal(ones(np.zeros(1), np.ones(1)), np.ones((2, 2)))
    lin = kernels.product_kernel(lambda x: x, 1, 1)
    assert lin(np.array([2.0]), np.array([3.0]))[0, 0] == 6.0
    sc = kernels.product_kernel(lambda x: np.concatenate([np.sin(x), np.cos(x)], -1), 1, 2)
    pts = np.linspace(0, 2 * np.pi, 12)[:, None]
    assert kernels.assess(sc, pts).lambda_min >= -1e-10


def test_combine_examples():
    K = gauss(1)
    x, y = np.array([0.1]), np.array([0.7])
    assert np.array_equal(kernels.combine("sum", K, kernels.zero_kernel(1))(x, y), K(x, y))
    assert np.array_equal(kernels.combine("scale", K, r=0.0)(x, y), np.zeros((1, 1)))
    A, B = shipped_pd_kernels()[1:3]
    for pts in designs(5, 10, 2, 12):
        assert lam_ok(kernels.combine("product", A, B), pts)
        assert lam_ok(A + B, pts)
    with pytest.raises(DimensionMismatch):
        kernels.combine("sum", gauss(1), gauss(2))


def test_exp_abs_counterexample_witness():
    K = kernels.exp_abs_counterexample()
    for y in (0.3, 1.0, 4.0):
        pts = np.array([[0.0], [y]])
        G = kernels.gram(K, pts)
        a = np.array([1.0, -1.0, 1.0, -1.0])
        assert a @ G @ a == pytest.approx(4 * (math.exp(-y) - math.exp(-0.5 * y)), rel=1e-13)
        rep = kernels.assess(K, pts)
        assert rep.verdict == INDEFINITE
        w = rep.witness
        assert w @ G @ w < 0


def test_verdict_thresholds():
    rep = kernels.gram_report(np.diag([1.0, 2.0]))
    assert rep.verdict == PD and rep.witness is None
    rep = kernels.gram_report(np.diag([0.0, 2.0]))
    assert rep.verdict == BORDERLINE
    rep = kernels.gram_report(np.diag([-1e-9, 2.0]))
    assert rep.verdict == BORDERLINE
    rep = kernels.gram_report(np.diag([-1e-7, 2.0]))
    assert rep.verdict == INDEFINITE
    assert rep.witness @ np.diag([-1e-7, 2.0]) @ rep.witness < 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.sampled_from([0.1, 1.0, 10.0]))
def test_closure_property_random_designs(seed, r):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, size=(12, 2))
    K = kernels.separable_kernel(mixtures.whittle_matern(1.0), SEP_M, 2)
    assert lam_ok(kernels.comp_sinh(K, r), pts)
    assert lam_ok(kernels.comp_exp_minus_one(K, r), pts)
