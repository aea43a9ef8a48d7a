"""K-means (Lloyd iterations, k-means++ seeding, restarts)."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DataError

__all__ = ["kmeans", "kmeans_fit"]


def _plusplus_centers(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center drawn with probability proportional
    to its squared distance from the nearest already-chosen center."""
    n = values.shape[0]
    centers = np.empty((k, values.shape[1]))
    idx = int(rng.integers(n))
    centers[0] = values[idx]
    if k == 1:
        return centers
    d2 = ((values - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[c] = values[idx]
        d2 = np.minimum(d2, ((values - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans_fit(values, k: int, seed, n_init: int = 10, max_iter: int = 100):
    """Best-of-``n_init`` k-means: returns (labels_0based, centers, inertia)."""
    values = np.ascontiguousarray(values, dtype=float)
    n = values.shape[0]
    if not 1 <= k <= n:
        raise DataError(f"k-means needs 1 <= K <= n, got K={k}, n={n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        centers0 = _plusplus_centers(values, k, rng)
        labels, centers, inertia, _ = kernels.lloyd(values, centers0, max_iter)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    return best


def kmeans(values, k: int, seed, n_init: int = 10, max_iter: int = 100):
    """Cluster ``values`` into ``k`` groups; returns a Clustering (labels 1..K).

    Deterministic given ``seed``.
    """
    from .gmm import Clustering

    labels, _, _ = kmeans_fit(values, k, seed, n_init=n_init, max_iter=max_iter)
    return Clustering(labels + 1)
