import numpy as np
import pytest

from molfuse.analysis import kmeans, pca_project
from molfuse.tensor import DimensionError


def test_pca_collinear_points():
    t = np.linspace(-1, 1, 20)
    x = np.stack([t, 2 * t], axis=1)
    proj, ratios = pca_project(x, 2)
    assert ratios[0] > 0.999999
    assert ratios[1] < 1e-9


def test_pca_isotropic_square_corners():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    _, ratios = pca_project(x, 2)
    assert np.allclose(ratios, [0.5, 0.5], atol=1e-9)


def test_pca_full_rank_reconstruction():
    rng = np.random.RandomState(0)
    x = rng.randn(50, 8)
    proj, ratios = pca_project(x, 8)
    # projections are coordinates in an orthonormal basis; distances survive
    centered = x - x.mean(axis=0)
    g1 = centered @ centered.T
    g2 = proj @ proj.T
    assert np.max(np.abs(g1 - g2)) < 1e-8
    assert abs(ratios.sum() - 1.0) < 1e-9


def test_pca_centering_and_order():
    rng = np.random.RandomState(1)
    x = rng.randn(40, 5) * np.array([5.0, 3.0, 1.0, 0.5, 0.1]) + 7.0
    proj, ratios = pca_project(x, 3)
    assert np.all(np.abs(proj.mean(axis=0)) < 1e-9)
    assert np.all(np.diff(ratios) <= 1e-12)


def test_pca_k_out_of_range():
    with pytest.raises(DimensionError):
        pca_project(np.zeros((3, 2)), 3)


def test_kmeans_k_equals_n():
    rng = np.random.RandomState(2)
    x = rng.randn(6, 3)
    assign, _, inertia = kmeans(x, 6, seed=0)
    assert inertia < 1e-12
    assert len(set(assign.tolist())) == 6


def test_kmeans_two_blobs():
    rng = np.random.RandomState(3)
    a = rng.randn(30, 2) * 0.1 + np.array([10.0, 0.0])
    b = rng.randn(30, 2) * 0.1 + np.array([-10.0, 0.0])
    x = np.concatenate([a, b])
    assign, _, _ = kmeans(x, 2, seed=5)
    assert len(set(assign[:30].tolist())) == 1
    assert len(set(assign[30:].tolist())) == 1
    assert assign[0] != assign[30]


def test_kmeans_deterministic_given_seed():
    rng = np.random.RandomState(4)
    x = rng.randn(40, 4)
    a1, c1, i1 = kmeans(x, 5, seed=9)
    a2, c2, i2 = kmeans(x, 5, seed=9)
    assert np.array_equal(a1, a2)
    assert np.array_equal(c1, c2)
    assert i1 == i2


def test_kmeans_inertia_non_increasing_over_iterations():
    rng = np.random.RandomState(5)
    x = rng.randn(60, 3)
    inertias = [kmeans(x, 4, max_iters=i, seed=1)[2] for i in range(1, 12)]
    assert all(b <= a + 1e-9 for a, b in zip(inertias, inertias[1:]))


def test_kmeans_k_greater_than_n_rejected():
    with pytest.raises(ValueError):
        kmeans(np.zeros((3, 2)), 4)
