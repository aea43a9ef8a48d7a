"""Clustering and density-estimation quality metrics."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .gmm import Clustering, GmmModel, log_densities

__all__ = ["ContingencyTable", "contingency_table", "ari", "mc_hellinger_sq"]


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # r x c co-occurrence counts

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def contingency_table(c1: Clustering, c2: Clustering) -> ContingencyTable:
    if c1.n != c2.n:
        raise ValueError(f"clusterings cover {c1.n} vs {c2.n} observations")
    _, i1 = np.unique(c1.labels, return_inverse=True)
    _, i2 = np.unique(c2.labels, return_inverse=True)
    r, c = i1.max() + 1, i2.max() + 1
    counts = np.zeros((r, c), dtype=np.int64)
    np.add.at(counts, (i1, i2), 1)
    return ContingencyTable(counts)


def _canonical(labels: np.ndarray) -> tuple:
    """Relabel by first occurrence so identical partitions compare equal."""
    mapping: dict[int, int] = {}
    return tuple(mapping.setdefault(int(v), len(mapping)) for v in labels)


def ari(c1: Clustering, c2: Clustering) -> float:
    """Adjusted Rand index between two partitions of the same observations.

    (Index - Expected) / (Max - Expected) on pair counts from the
    contingency table, computed in exact integer arithmetic with a single
    final division. When both partitions are trivial (Max == Expected) the
    value is 1 for identical partitions and 0 otherwise.
    """
    table = contingency_table(c1, c2)
    n = table.n
    index = sum(comb(int(v), 2) for v in table.counts.ravel())
    sum_a = sum(comb(int(v), 2) for v in table.row_sums)
    sum_b = sum(comb(int(v), 2) for v in table.col_sums)
    pairs = comb(n, 2)
    # ARI = (pairs*index - sum_a*sum_b) / (pairs*(sum_a+sum_b)/2 - sum_a*sum_b)
    num = 2 * pairs * index - 2 * sum_a * sum_b
    den = pairs * (sum_a + sum_b) - 2 * sum_a * sum_b
    if den == 0:
        return 1.0 if _canonical(c1.labels) == _canonical(c2.labels) else 0.0
    return num / den


def mc_hellinger_sq(
    model: GmmModel,
    truth_sampler,
    truth_log_density,
    n_mc: int = 100_000,
    seed=0,
) -> tuple[float, float]:
    """Monte-Carlo estimate of 1 - E_{x~f*}[sqrt(f_model(x) / f*(x))].

    ``truth_sampler(rng, n)`` draws n rows from the reference density f*,
    ``truth_log_density(x)`` evaluates ln f* row-wise. Returns the clamped
    estimate in [0, 1] and its standard error.
    """
    if n_mc < 100:
        raise ValueError("n_mc must be at least 100")
    rng = np.random.default_rng(seed)
    x = np.atleast_2d(np.asarray(truth_sampler(rng, n_mc), dtype=float))
    log_ratio = log_densities(model, x) - np.asarray(truth_log_density(x), dtype=float)
    if not np.isfinite(log_ratio).all():
        raise ValueError("non-finite log-density ratio at a sampled point")
    w = np.exp(0.5 * log_ratio)
    estimate = min(1.0, max(0.0, 1.0 - float(w.mean())))
    std_error = float(w.std(ddof=1) / np.sqrt(n_mc))
    return estimate, std_error
