"""Seeded synthetic categorical data: clustered datasets and pairs at a planted distance."""

from __future__ import annotations

import numpy as np

from .core import CategoricalVector
from .data_io import Dataset


def random_sparse_vector(n: int, nnz: int, c: int, rng: np.random.Generator) -> CategoricalVector:
    """Exactly ``nnz`` attributes chosen uniformly, values uniform in [1, c]."""
    idx = rng.choice(n, size=nnz, replace=False)
    return CategoricalVector(n, idx, rng.integers(1, c + 1, size=nnz))


def _different_value(v: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    # Uniform over [1, c] minus the current value.
    shift = rng.integers(1, c, size=v.shape)
    return (v - 1 + shift) % c + 1


def planted_pair(n: int, sigma: int, c: int, h: int,
                 rng: np.random.Generator) -> tuple[CategoricalVector, CategoricalVector]:
    """Two vectors with ``nnz <= sigma`` each and Hamming distance exactly ``h``.

    ``y`` is ``x`` with ``a`` values changed in place and ``b`` attributes moved to
    fresh positions, where ``a + 2b == h``.
    """
    if not 0 <= h <= 2 * sigma:
        raise ValueError(f"h must lie in [0, 2*sigma], got {h}")
    if c < 2 and h % 2:
        raise ValueError("odd distances need at least two categories")
    if n < sigma + max(0, h - sigma):
        raise ValueError("n too small for the requested distance")
    x = random_sparse_vector(n, sigma, c, rng)
    lo, hi = max(0, h - sigma), h // 2
    if c < 2:
        lo = hi = h // 2
    b = int(rng.integers(lo, hi + 1))
    a = h - 2 * b
    order = rng.permutation(sigma)
    changed, moved = order[:a], order[a:a + b]
    y_idx = x.indices.copy()
    y_val = x.values.copy()
    y_val[changed] = _different_value(y_val[changed], c, rng)
    free = np.setdiff1d(np.arange(n), x.indices, assume_unique=True)
    y_idx[moved] = rng.choice(free, size=b, replace=False)
    return x, CategoricalVector(n, y_idx, y_val)


def make_synthetic(num_points: int, n: int, sigma: int, c: int, seed: int,
                   clusters: int | None = None, mutation: float = 0.3,
                   name: str | None = None) -> tuple[Dataset, np.ndarray]:
    """Clustered dataset where every point has exactly ``sigma`` non-zeros.

    Each cluster has a random centre; a point copies its centre and then, for each
    attribute independently with probability ``mutation``, either changes the
    value or moves the attribute to an unused position. Returns the dataset and the
    planted cluster label of each point.
    """
    if sigma > n:
        raise ValueError("sigma cannot exceed n")
    if c < 1:
        raise ValueError("c must be positive")
    rng = np.random.default_rng(seed)
    clusters = clusters or max(1, num_points // 10)
    centres = [random_sparse_vector(n, sigma, c, rng) for _ in range(clusters)]
    labels = rng.integers(0, clusters, size=num_points)
    points = []
    for label in labels:
        centre = centres[label]
        idx = centre.indices.copy()
        val = centre.values.copy()
        hit = np.flatnonzero(rng.random(sigma) < mutation)
        move = hit[rng.random(hit.size) < 0.5] if c > 1 else hit
        change = np.setdiff1d(hit, move)
        if c > 1:
            val[change] = _different_value(val[change], c, rng)
        free = np.setdiff1d(np.arange(n), idx, assume_unique=True)
        take = min(move.size, free.size)
        idx[move[:take]] = rng.choice(free, size=take, replace=False)
        val[move[:take]] = rng.integers(1, c + 1, size=take)
        points.append(CategoricalVector(n, idx, val))
    name = name or f"synthetic(n={n},sigma={sigma},c={c},seed={seed})"
    return Dataset.from_vectors(points, name, category_bound=c, n=n), labels
