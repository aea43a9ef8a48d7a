"""Constrained Gaussian mixtures over a configuration eta = (K, S).

A configuration fixes the number of components K and the set S of active
variables (1-based column indices). On S the model is a K-component
mixture; off S every coordinate is standard normal noise common to all
components. Only the LB shape ships: one diagonal covariance shared by
all components on S.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels
from .errors import NumericalError
from .kmeans import kmeans_fit

__all__ = [
    "Configuration",
    "Shape",
    "GmmModel",
    "Clustering",
    "log_density",
    "log_densities",
    "neg_log_likelihood",
    "responsibilities",
    "map_clustering",
    "fit_em",
    "free_params",
    "model_to_json",
    "model_from_json",
]

_LOG_2PI = 1.8378770664093453


class Shape(str, enum.Enum):
    """Covariance constraint family on the active block."""

    LB = "LB"  # identical diagonal covariance across components


@dataclass(frozen=True, order=True)
class Configuration:
    """Cluster count K plus the sorted set S of active variables (1-based)."""

    K: int
    S: tuple[int, ...]

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        s = tuple(sorted(set(int(j) for j in self.S)))
        if s and s[0] < 1:
            raise ValueError("variable indices are 1-based")
        object.__setattr__(self, "S", s)

    @classmethod
    def make(cls, k: int, s: Iterable[int]) -> "Configuration":
        return cls(K=int(k), S=tuple(s))

    @property
    def size(self) -> int:
        return len(self.S)

    def columns(self) -> np.ndarray:
        """0-based column indices of the active variables."""
        return np.asarray(self.S, dtype=np.int64) - 1


@dataclass(frozen=True)
class Clustering:
    """Assignment of each observation to a cluster label in {1..K}."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-D integer array")
        if labels.min() < 1:
            raise ValueError("cluster labels start at 1")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        """Cluster sizes indexed by label-1 (up to the largest label)."""
        return np.bincount(self.labels - 1)


@dataclass(frozen=True)
class GmmModel:
    """Fitted mixture parameters for one configuration under the LB shape.

    ``means`` is K x |S|, ``variances`` the length-|S| shared diagonal.
    Off-support coordinates are implicitly mean 0, variance 1 and never
    stored. ``fit_nll``/``fit_nll_path`` carry diagnostics of the EM run
    that produced the model (full-density NLL on the fitting sample).
    """

    config: Configuration
    shape: Shape
    proportions: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    d: int
    fit_nll: float | None = field(default=None, compare=False, repr=False)
    fit_nll_path: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.proportions, dtype=float)
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        var = np.asarray(self.variances, dtype=float)
        k, s = self.config.K, self.config.size
        if mu.size == 0:
            mu = mu.reshape(k, 0)
        if p.shape != (k,) or mu.shape != (k, s) or var.shape != (s,):
            raise ValueError("parameter shapes inconsistent with the configuration")
        if abs(p.sum() - 1.0) > 1e-12 or (p < 0).any():
            raise ValueError("proportions must be non-negative and sum to 1")
        if (var <= 0).any():
            raise ValueError("variances must be positive")
        if s and max(self.config.S) > self.d:
            raise ValueError("active variable index exceeds the ambient dimension")
        for name, arr in (("proportions", p), ("means", mu), ("variances", var)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _noise_log_density(values: np.ndarray, config: Configuration) -> np.ndarray:
    """Standard-normal log-density of the off-support coordinates, per row."""
    comp = np.setdiff1d(np.arange(values.shape[1]), config.columns())
    if comp.size == 0:
        return np.zeros(values.shape[0])
    block = values[:, comp]
    return -0.5 * (comp.size * _LOG_2PI + (block * block).sum(axis=1))


def _mixture_log_weights(model: GmmModel, values: np.ndarray) -> np.ndarray:
    """(n, K) matrix of ln(p_k) + component log-density on the active block."""
    logp = np.log(np.maximum(model.proportions, 1e-300))
    if model.config.size == 0:
        return np.broadcast_to(logp, (values.shape[0], model.config.K)).copy()
    block = np.ascontiguousarray(values[:, model.config.columns()])
    return kernels.log_weights(block, model.means, model.variances, logp)


def _logsumexp_rows(lw: np.ndarray) -> np.ndarray:
    m = lw.max(axis=1)
    return m + np.log(np.exp(lw - m[:, None]).sum(axis=1))


def log_densities(model: GmmModel, values: np.ndarray) -> np.ndarray:
    """ln f(x_i) for every row: noise block plus log-sum-exp of the mixture."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != model.d:
        raise ValueError(f"expected dimension {model.d}, got {values.shape[1]}")
    return _noise_log_density(values, model.config) + _logsumexp_rows(
        _mixture_log_weights(model, values)
    )


def log_density(model: GmmModel, x) -> float:
    """ln f(x) of a single observation."""
    return float(log_densities(model, np.asarray(x, dtype=float)[None, :])[0])


def neg_log_likelihood(model: GmmModel, values: np.ndarray) -> float:
    """Sum of -ln f over the given observations."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 0:
        raise ValueError("cannot evaluate a likelihood on an empty subset")
    return float(-log_densities(model, values).sum())


def responsibilities(model: GmmModel, values: np.ndarray) -> np.ndarray:
    """Conditional component probabilities t_ik; rows sum to 1."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != model.d:
        raise ValueError(f"expected dimension {model.d}, got {values.shape[1]}")
    lw = _mixture_log_weights(model, values)
    return np.exp(lw - _logsumexp_rows(lw)[:, None])


def map_clustering(model: GmmModel, values: np.ndarray) -> Clustering:
    """Assign each row to the component maximizing p_k * phi_k(x); ties go to
    the lowest component index."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != model.d:
        raise ValueError(f"expected dimension {model.d}, got {values.shape[1]}")
    lw = _mixture_log_weights(model, values)
    return Clustering(lw.argmax(axis=1) + 1)


def free_params(config: Configuration, shape: Shape = Shape.LB, paper_convention: bool = False) -> int:
    """Number of free parameters of the LB-shape model for ``config``.

    The direct count is (K-1) proportions + K|S| means + |S| shared
    variances. ``paper_convention=True`` returns (K+1)|S| - 1 instead, for
    compatibility with analyses using that dimension formula.
    """
    if shape is not Shape.LB:
        raise ValueError(f"unsupported shape {shape}")
    k, s = config.K, config.size
    if paper_convention:
        return (k + 1) * s - 1
    return (k - 1) + k * s + s


def fit_em(
    values: np.ndarray,
    config: Configuration,
    shape: Shape = Shape.LB,
    *,
    seed=0,
    n_starts: int = 3,
    tol: float = 1e-6,
    max_iter: int = 200,
    variance_floor: float = 1e-4,
) -> GmmModel:
    """Constrained maximum-likelihood fit of ``config`` on ``values`` by EM.

    Each start seeds the component means from a single k-means run on the
    active block (distinct seeds per start), uniform proportions and the
    column variances; the best final NLL wins. Deterministic given ``seed``.

    Parameters
    ----------
    values : (n, d) array, the estimation sample.
    config : configuration (K, S) to fit.
    seed : int or numpy SeedSequence for the k-means initializations.
    n_starts : independent EM starts.
    tol : stop when the relative NLL decrease falls below this.
    max_iter : EM iteration cap per start.
    variance_floor : lower bound applied to the shared diagonal variances.
    """
    if shape is not Shape.LB:
        raise ValueError(f"unsupported shape {shape}")
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, d = values.shape
    k = config.K
    if k > n:
        raise ValueError(f"cannot fit K={k} components on {n} observations")
    if config.size and max(config.S) > d:
        raise ValueError("active variable index exceeds the data dimension")

    if config.size == 0:
        # Pure-noise model: no free parameters on the (empty) active block.
        model = GmmModel(
            config=config,
            shape=shape,
            proportions=np.full(k, 1.0 / k),
            means=np.zeros((k, 0)),
            variances=np.zeros(0),
            d=d,
        )
        nll = neg_log_likelihood(model, values)
        return GmmModel(
            config=config,
            shape=shape,
            proportions=model.proportions,
            means=model.means,
            variances=model.variances,
            d=d,
            fit_nll=nll,
            fit_nll_path=np.asarray([nll]),
        )

    block = np.ascontiguousarray(values[:, config.columns()])
    noise_const = float(-_noise_log_density(values, config).sum())
    col_var = np.maximum(block.var(axis=0), variance_floor)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    best = None
    for child in root.spawn(max(1, n_starts)):
        _, centers, _ = kmeans_fit(block, k, child, n_init=1)
        props, means, variances, path, _ = kernels.em_lb(
            block,
            np.full(k, 1.0 / k),
            centers,
            col_var,
            tol,
            max_iter,
            variance_floor,
        )
        if not np.isfinite(path[-1]):
            raise NumericalError(f"EM produced a non-finite likelihood for {config}")
        if best is None or path[-1] < best[3][-1]:
            best = (props, means, variances, path)

    props, means, variances, path = best
    return GmmModel(
        config=config,
        shape=shape,
        proportions=props / props.sum(),
        means=means,
        variances=variances,
        d=d,
        fit_nll=float(path[-1] + noise_const),
        fit_nll_path=np.asarray(path) + noise_const,
    )


def model_to_json(model: GmmModel) -> str:
    """Serialize to a JSON document; floats round-trip exactly."""
    doc = {
        "K": model.config.K,
        "S": list(model.config.S),
        "proportions": model.proportions.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
        "shape": model.shape.value,
        "d": model.d,
    }
    return json.dumps(doc)


def model_from_json(text: str) -> GmmModel:
    doc = json.loads(text)
    config = Configuration.make(doc["K"], doc["S"])
    return GmmModel(
        config=config,
        shape=Shape(doc["shape"]),
        proportions=np.asarray(doc["proportions"], dtype=float),
        means=np.asarray(doc["means"], dtype=float).reshape(config.K, config.size),
        variances=np.asarray(doc["variances"], dtype=float),
        d=int(doc["d"]),
    )
