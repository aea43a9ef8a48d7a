"""Post-treatment of the chains: per-chain configuration choice, temperature
selection by AIC/BIC, the across-split majority vote, and the two final
clusterings (direct refit and co-occurrence CAH)."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .gmm import (
    Clustering,
    Configuration,
    GmmModel,
    Shape,
    fit_em,
    free_params,
    map_clustering,
    neg_log_likelihood,
)
from .mh import ChainTrajectory

__all__ = [
    "SplitResult",
    "SimilarityMatrix",
    "select_configuration",
    "select_temperature",
    "majority_vote",
    "similarity_matrix",
    "aggregated_clustering",
    "final_fit",
]


@dataclass(frozen=True)
class SplitResult:
    """Everything one split contributes to the vote."""

    split_id: int
    per_lambda: dict[float, Configuration]
    chosen_lambda: float
    config: Configuration  # eta(b) = eta(b, lambda(b))
    model: GmmModel  # refit of eta(b) on the full sample
    clustering: Clustering  # its MAP clustering of the full sample


@dataclass(frozen=True)
class SimilarityMatrix:
    """a_ij = number of splits placing observations i and j together."""

    counts: np.ndarray
    n_splits: int


def select_configuration(trajectory: ChainTrajectory, window: int = 100) -> Configuration:
    """Most visited configuration among the last ``window`` post-burn-in
    states; ties broken by the most recently visited."""
    tail = trajectory.configs(start=trajectory.pruning_end)
    if not tail:
        warnings.warn("trajectory has no post-burn-in states; using the final state", stacklevel=2)
        return trajectory.final_config
    if len(tail) < window:
        warnings.warn(
            f"only {len(tail)} post-burn-in states for a window of {window}; using all of them",
            stacklevel=2,
        )
    tail = tail[-window:]
    counts = Counter(tail)
    last_seen = {cfg: i for i, cfg in enumerate(tail)}
    return max(counts, key=lambda cfg: (counts[cfg], last_seen[cfg]))


def select_temperature(
    fits_by_lambda: dict[float, tuple[Configuration, GmmModel]],
    values: np.ndarray,
    criterion: str = "bic",
) -> tuple[float, Configuration]:
    """Pick the temperature whose selected configuration minimizes
    -2*loglik(X) + penalty*|eta| with penalty 1 (aic) or ln n (bic);
    ties go to the smaller lambda."""
    if not fits_by_lambda:
        raise ValueError("empty temperature grid")
    if criterion not in ("aic", "bic"):
        raise ValueError(f"criterion must be 'aic' or 'bic', got {criterion!r}")
    values = np.atleast_2d(np.asarray(values, dtype=float))
    penalty = 1.0 if criterion == "aic" else math.log(values.shape[0])
    best_lam, best_score = None, math.inf
    for lam in sorted(fits_by_lambda):
        config, model = fits_by_lambda[lam]
        score = 2.0 * neg_log_likelihood(model, values) + penalty * free_params(config, model.shape)
        if score < best_score:
            best_lam, best_score = lam, score
    return best_lam, fits_by_lambda[best_lam][0]


def majority_vote(split_results: list[SplitResult], d: int) -> tuple[Configuration, np.ndarray]:
    """Across-split vote: variable importances, strict-majority support, and
    the cluster count rounded from the mean (half-values rounded down)."""
    if not split_results:
        raise ValueError("need at least one split result")
    importance = np.zeros(d)
    for res in split_results:
        for j in res.config.S:
            importance[j - 1] += 1.0
    importance /= len(split_results)
    support = tuple(int(j + 1) for j in np.flatnonzero(importance > 0.5))
    mean_k = sum(res.config.K for res in split_results) / len(split_results)
    k_hat = max(1, math.ceil(mean_k - 0.5))
    return Configuration(k_hat, support), importance


def similarity_matrix(clusterings: list[Clustering]) -> SimilarityMatrix:
    if not clusterings:
        raise ValueError("need at least one clustering")
    n = clusterings[0].n
    counts = np.zeros((n, n), dtype=np.int64)
    for c in clusterings:
        if c.n != n:
            raise ValueError("all clusterings must cover the same observations")
        counts += c.labels[:, None] == c.labels[None, :]
    return SimilarityMatrix(counts=counts, n_splits=len(clusterings))


def aggregated_clustering(clusterings: list[Clustering], k_hat: int) -> Clustering:
    """Average-linkage agglomeration of exp(-a_ij/B) cut at ``k_hat`` clusters.

    The normalization by B keeps the dissimilarities in [e^-1, 1] for any
    number of splits; it is a strictly monotone transform of the raw
    co-occurrence counts.
    """
    sim = similarity_matrix(clusterings)
    n = sim.counts.shape[0]
    if k_hat > n:
        raise ValueError(f"cannot cut {n} observations into {k_hat} clusters")
    if k_hat == 1:
        return Clustering(np.ones(n, dtype=np.int64))
    delta = np.exp(-sim.counts / sim.n_splits)
    np.fill_diagonal(delta, 0.0)
    tree = linkage(squareform(delta, checks=False), method="average")
    return Clustering(fcluster(tree, t=k_hat, criterion="maxclust"))


def final_fit(
    values: np.ndarray,
    config: Configuration,
    shape: Shape = Shape.LB,
    *,
    seed=0,
    n_starts: int = 3,
    variance_floor: float = 1e-4,
) -> tuple[GmmModel, Clustering]:
    """Fit the voted configuration on the whole sample and cluster by MAP."""
    model = fit_em(
        values, config, shape, seed=seed, n_starts=n_starts, variance_floor=variance_floor
    )
    return model, map_clustering(model, values)
