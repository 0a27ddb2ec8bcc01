"""Unsupervised diagnostics: PCA projection and k-means clustering.

PCA eigendecomposes the d x d covariance with a cyclic Jacobi sweep
(tolerance 1e-10), which keeps the result independent of the local LAPACK
build.  k-means is k-means++ seeded Lloyd iteration, deterministic given
the seed, with empty clusters re-seeded to the farthest point.
"""

from __future__ import annotations

import numpy as np

from .tensor import DimensionError


def _jacobi_eigh(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100):
    """Eigenvalues/vectors of a symmetric matrix by cyclic Jacobi rotations."""
    a = a.astype(np.float64).copy()
    d = a.shape[0]
    v = np.eye(d)
    for _ in range(max_sweeps):
        off = np.sqrt((a**2).sum() - (np.diag(a) ** 2).sum())
        if off <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                if abs(a[p, q]) <= tol / (d * d + 1):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def pca_project(x: np.ndarray, k: int):
    """Project rows of ``x`` onto the top-k principal directions.

    Returns (n x k projections, explained-variance ratios).  Components are
    ordered by decreasing variance; each component's sign is fixed so its
    largest-magnitude coordinate is positive.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"pca_project expects a matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise DimensionError("pca_project needs at least 2 rows")
    if not (1 <= k <= min(n, d)):
        raise DimensionError(f"k={k} out of range for {n}x{d} input")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    evals, evecs = _jacobi_eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order]
    for j in range(d):
        col = evecs[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            evecs[:, j] = -col
    total = evals.sum()
    ratios = evals[:k] / total if total > 0 else np.zeros(k)
    return centered @ evecs[:, :k], ratios


def kmeans(x: np.ndarray, k: int, max_iters: int = 100, seed: int = 0):
    """Lloyd's algorithm with k-means++ seeding.

    Returns (assignments, centroids, inertia).  Inertia is non-increasing
    over iterations; identical seeds give identical results; a cluster that
    empties is re-seeded to the point farthest from its centroid.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"kmeans expects a matrix, got shape {x.shape}")
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"kmeans needs 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.RandomState(seed)

    # k-means++ seeding
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.randint(n)]
    dist2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = dist2.sum()
        if total <= 0:
            centroids[j] = x[rng.randint(n)]
        else:
            r = rng.rand() * total
            centroids[j] = x[np.searchsorted(np.cumsum(dist2), r)]
        dist2 = np.minimum(dist2, ((x - centroids[j]) ** 2).sum(axis=1))

    assignments = np.zeros(n, dtype=np.int64)
    for _ in range(max_iters):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        for j in range(k):
            members = x[new_assign == j]
            if len(members) == 0:
                far = int(d2[np.arange(n), new_assign].argmax())
                centroids[j] = x[far]
                new_assign[far] = j
            else:
                centroids[j] = members.mean(axis=0)
        if np.array_equal(new_assign, assignments):
            assignments = new_assign
            break
        assignments = new_assign
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assignments = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), assignments].sum())
    return assignments, centroids, inertia
