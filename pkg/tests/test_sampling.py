import numpy as np
import pytest

from quadflow import (OrthonormalFrame, build_projection_product,
                      orthonormal_weights, sample_gaussian_weights,
                      sample_stiefel)


def test_stiefel_columns_orthonormal():
    rng = np.random.default_rng(0)
    for d, k in [(10, 3), (50, 50), (200, 1)]:
        U = sample_stiefel(d, k, rng).U
        assert np.linalg.norm(U.T @ U - np.eye(k)) <= 1e-10
        assert np.allclose(np.linalg.norm(U, axis=0), 1.0, atol=1e-10)


def test_stiefel_square_frame_is_orthogonal():
    U = sample_stiefel(8, 8, np.random.default_rng(1)).U
    assert abs(abs(np.linalg.det(U)) - 1.0) <= 1e-8


def test_stiefel_rejects_bad_shape():
    with pytest.raises(ValueError):
        sample_stiefel(3, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_stiefel(3, 0, np.random.default_rng(0))


def test_stiefel_deterministic_given_seed():
    U1 = sample_stiefel(20, 5, 1234).U
    U2 = sample_stiefel(20, 5, 1234).U
    assert np.array_equal(U1, U2)


def test_stiefel_uniformity_proxy():
    # projection of a fixed basis vector: E ||U^T e1||^2 = k/d
    d, k, n = 200, 60, 200
    rng = np.random.default_rng(2)
    vals = np.array([np.sum(sample_stiefel(d, k, rng).U[0] ** 2)
                     for _ in range(n)])
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - k / d) <= 3 * se


def test_gaussian_weights_statistics():
    W = sample_gaussian_weights(1000, 500, np.random.default_rng(3))
    e = W.entries
    assert abs(e.mean()) <= 3 * e.std() / np.sqrt(e.size)
    # entry variance 1/(d m) within 5 standard errors
    var = e.var()
    target = 1.0 / (1000 * 500)
    se = np.sqrt(2.0 / e.size) * target
    assert abs(var - target) <= 5 * se


def test_gaussian_weights_trace_concentration():
    rng = np.random.default_rng(4)
    for _ in range(5):
        W = sample_gaussian_weights(1000, 500, rng)
        assert abs(np.sum(W.entries ** 2) - 1.0) <= 0.1


def test_gaussian_weights_deterministic():
    a = sample_gaussian_weights(10, 4, 99).entries
    b = sample_gaussian_weights(10, 4, 99).entries
    assert np.array_equal(a, b)


def test_projection_product_of_identical_frames():
    U = sample_stiefel(12, 4, np.random.default_rng(5))
    Y = build_projection_product(U, U)
    assert np.linalg.norm(Y - np.eye(4)) <= 1e-10


def test_projection_product_spectrum_in_unit_interval():
    rng = np.random.default_rng(6)
    U0 = sample_stiefel(30, 10, rng)
    Us = sample_stiefel(30, 15, rng)
    Y = build_projection_product(U0, Us)
    vals = np.linalg.eigvalsh(Y)
    assert vals.min() >= -1e-10
    assert vals.max() <= 1.0 + 1e-10


def test_projection_product_trace_ratio():
    # (1/m) Tr Y concentrates around m*/d
    rng = np.random.default_rng(7)
    vals = []
    for _ in range(3):
        U0 = sample_stiefel(2000, 600, rng)
        Us = sample_stiefel(2000, 1000, rng)
        vals.append(np.trace(build_projection_product(U0, Us)) / 600)
    assert abs(np.mean(vals) - 0.5) <= 0.02


def test_projection_product_dimension_mismatch():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError):
        build_projection_product(sample_stiefel(10, 2, rng),
                                 sample_stiefel(12, 2, rng))


def test_orthonormal_weights_unit_trace():
    W = orthonormal_weights(40, 10, np.random.default_rng(9))
    assert np.trace(W.gram()) == pytest.approx(1.0, abs=1e-12)


def test_frame_validation():
    with pytest.raises(ValueError):
        OrthonormalFrame(np.ones((4, 2)))
