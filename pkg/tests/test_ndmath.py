import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from codlr.ndmath import (
    circular_convolution,
    circular_correlation,
    grad_check,
    pca2,
    relu,
    sigmoid,
    softmax,
)

finite = st.floats(-10, 10, allow_nan=False, width=64)


def corr_oracle(a, b):
    d = len(a)
    return [sum(a[i] * b[(k + i) % d] for i in range(d)) for k in range(d)]


def test_circular_correlation_examples():
    assert corr_oracle([1, 2, 3], [4, 5, 6]) == [32, 29, 29]
    np.testing.assert_allclose(circular_correlation([1, 2, 3], [4, 5, 6]), [32, 29, 29])
    b = np.array([0.3, -1.2, 4.0, 2.5])
    np.testing.assert_allclose(circular_correlation([1, 0, 0, 0], b), b)
    np.testing.assert_array_equal(circular_correlation([0, 0], [7, -3]), [0, 0])


def test_circular_correlation_length_mismatch():
    with pytest.raises(ValueError):
        circular_correlation([1, 2], [1, 2, 3])


@given(st.integers(1, 9).flatmap(lambda d: st.tuples(*[arrays(np.float64, d, elements=finite)] * 2)))
def test_circular_correlation_matches_loop(ab):
    a, b = ab
    np.testing.assert_allclose(circular_correlation(a, b), corr_oracle(a, b), atol=1e-9)


@given(st.integers(1, 8), st.integers(0, 2**31), finite, finite)
def test_circular_correlation_bilinear(d, seed, alpha, beta):
    rng = np.random.default_rng(seed)
    a, a2, b = rng.standard_normal((3, d))
    lhs = circular_correlation(alpha * a + beta * a2, b)
    rhs = alpha * circular_correlation(a, b) + beta * circular_correlation(a2, b)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)
    lhs = circular_correlation(b, alpha * a + beta * a2)
    rhs = alpha * circular_correlation(b, a) + beta * circular_correlation(b, a2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_convolution_is_adjoint_of_correlation():
    rng = np.random.default_rng(3)
    a, b, g = rng.standard_normal((3, 7))
    # <g, corr(a, b)> == <conv(a, g), b>
    assert np.dot(g, circular_correlation(a, b)) == pytest.approx(np.dot(circular_convolution(a, g), b))


def test_softmax_examples():
    np.testing.assert_allclose(softmax([0, 0, 0]), [1 / 3] * 3)
    out = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(out)) and out[0] == pytest.approx(1.0) and out[1] < 1e-300 + 1e-12
    np.testing.assert_allclose(softmax([math.log(2), 0.0]), [2 / 3, 1 / 3])


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-50, 50)), st.floats(-100, 100))
def test_softmax_is_probability_and_shift_invariant(g, c):
    p = softmax(g)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) < 1e-6
    np.testing.assert_allclose(softmax(g + c), p, atol=1e-9)


def test_activations():
    assert sigmoid(0.0) == 0.5
    assert relu(-3.0) == 0.0
    assert sigmoid(2.0) == pytest.approx(0.880797, abs=1e-6)
    assert sigmoid(2.0) == pytest.approx(1 / (1 + math.exp(-2)))


def test_grad_check_quadratic_and_sign_flip():
    theta = np.array([0.3, -1.2, 2.0, 0.7])
    f = lambda x: float(x @ x)
    assert grad_check(f, theta, 2 * theta) < 1e-5
    # |fd - (-fd)| / (|fd| + |fd|) == 1 on every coordinate
    assert grad_check(f, theta, -2 * theta) == pytest.approx(1.0, abs=1e-6)


def test_grad_check_rejects_non_finite():
    with pytest.raises(FloatingPointError):
        grad_check(lambda x: float("nan"), np.zeros(2), np.zeros(2))


def _eigh_projection(x):
    xc = x - x.mean(axis=0)
    w, v = np.linalg.eigh(np.cov(xc, rowvar=False))
    v = v[:, ::-1][:, :2]
    for j in range(2):
        if v[np.argmax(np.abs(v[:, j])), j] < 0:
            v[:, j] *= -1
    return xc @ v


def test_pca2_matches_eigendecomposition():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((40, 6)) * np.array([5.0, 3.0, 1.0, 0.5, 0.2, 0.1])
    x = x @ np.linalg.qr(rng.standard_normal((6, 6)))[0]
    np.testing.assert_allclose(pca2(x), _eigh_projection(x), atol=1e-4)


def test_pca2_collinear_points():
    x = np.zeros((10, 4))
    x[:, 0] = np.arange(10)
    p = pca2(x)
    np.testing.assert_allclose(p[:, 1], 0, atol=1e-9)
    assert np.var(p[:, 0]) > 0


def test_pca2_centered_2d_is_rotation():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((25, 2)) * [3.0, 1.0]
    x -= x.mean(axis=0)
    p = pca2(x)
    dx = np.linalg.norm(x[:, None] - x[None], axis=-1)
    dp = np.linalg.norm(p[:, None] - p[None], axis=-1)
    np.testing.assert_allclose(dp, dx, atol=1e-4)


def test_pca2_duplicates_and_rank_zero():
    x = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [4.0, 0.0, 1.0], [0.0, 5.0, 2.0]])
    p = pca2(x)
    np.testing.assert_array_equal(p[0], p[1])
    np.testing.assert_array_equal(pca2(np.ones((5, 3))), np.zeros((5, 2)))


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.integers(3, 30), st.integers(2, 8))
def test_pca2_variance_ordering(seed, m, d):
    x = np.random.default_rng(seed).standard_normal((m, d))
    p = pca2(x)
    assert p[:, 0].var() >= p[:, 1].var() - 1e-9
