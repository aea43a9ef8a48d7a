"""Datasets: construction, standardization, splitting, simulation, CSV I/O."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "Dataset",
    "SplitPair",
    "standardize",
    "split",
    "simulate",
    "simulate_mixture",
    "read_csv",
    "write_csv",
    "EXPERIMENTS",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An n x d numeric sample, optionally with ground-truth cluster labels.

    ``column_means``/``column_sds`` record the statistics of the data as it
    was before any standardization (sample sd, divisor n-1). Instances are
    immutable and safe to share across concurrent chains.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    column_means: np.ndarray = field(default=None)  # type: ignore[assignment]
    column_sds: np.ndarray = field(default=None)  # type: ignore[assignment]
    standardized: bool = False

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise DataError("dataset values must be a 2-D matrix")
        n, d = values.shape
        if n < 2 or d < 1:
            raise DataError(f"need at least 2 observations and 1 variable, got {n}x{d}")
        if not np.isfinite(values).all():
            raise DataError("dataset contains missing or non-finite values")
        object.__setattr__(self, "values", _readonly(values))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (n,):
                raise DataError("labels must be one integer per observation")
            object.__setattr__(self, "labels", _readonly(labels))
        if self.column_means is None:
            object.__setattr__(self, "column_means", _readonly(values.mean(axis=0)))
        else:
            object.__setattr__(self, "column_means", _readonly(np.asarray(self.column_means, dtype=float)))
        if self.column_sds is None:
            object.__setattr__(self, "column_sds", _readonly(values.std(axis=0, ddof=1)))
        else:
            object.__setattr__(self, "column_sds", _readonly(np.asarray(self.column_sds, dtype=float)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SplitPair:
    """Disjoint learn/estimate index sets covering {0..n-1}."""

    learn_indices: np.ndarray
    estimate_indices: np.ndarray
    seed: int

    def __post_init__(self):
        learn = np.asarray(self.learn_indices, dtype=np.int64)
        estimate = np.asarray(self.estimate_indices, dtype=np.int64)
        if learn.size == 0 or estimate.size == 0:
            raise DataError("both split parts must be non-empty")
        union = np.concatenate([learn, estimate])
        n = union.size
        if np.intersect1d(learn, estimate).size or not np.array_equal(np.sort(union), np.arange(n)):
            raise DataError("split parts must partition the observation indices")
        object.__setattr__(self, "learn_indices", _readonly(np.sort(learn)))
        object.__setattr__(self, "estimate_indices", _readonly(np.sort(estimate)))


def standardize(dataset: Dataset) -> Dataset:
    """Center every column and scale non-constant ones to sample sd 1.

    A constant column carries no clustering information; it is centered,
    its sd recorded as 0, and a warning emitted.
    """
    values = dataset.values
    means = values.mean(axis=0)
    sds = values.std(axis=0, ddof=1)
    constant = sds == 0
    if constant.any():
        cols = ", ".join(str(j + 1) for j in np.flatnonzero(constant))
        warnings.warn(f"constant column(s) {cols}: centered but not scaled", stacklevel=2)
    scale = np.where(constant, 1.0, sds)
    out = (values - means) / scale
    return Dataset(
        values=out,
        labels=dataset.labels,
        column_means=means,
        column_sds=np.where(constant, 0.0, sds),
        standardized=True,
    )


def split(dataset: Dataset, fraction: float, seed) -> SplitPair:
    """Uniformly random partition with |learn| = round(fraction * n)."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"split fraction must be in (0, 1), got {fraction}")
    n = dataset.n
    n1 = round(fraction * n)
    if n1 == 0 or n1 == n:
        raise DataError(f"fraction {fraction} makes one split part empty for n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    seed_int = int(seed) if np.isscalar(seed) else -1
    return SplitPair(learn_indices=perm[:n1], estimate_indices=perm[n1:], seed=seed_int)


# name -> (d, n_active, component active-means builder, component sizes)
EXPERIMENTS = {
    "illustrative": dict(
        d=100,
        active_means=lambda: np.vstack([np.ones(15), np.zeros(15)]),
        sizes=(100, 100),
    ),
    "exp1": dict(
        d=100,
        active_means=lambda: np.vstack(
            [1.0 - 0.05 * np.arange(20), np.zeros(20), -(1.0 - 0.05 * np.arange(20))]
        ),
        sizes=(200, 200, 400),
    ),
    "exp2": dict(
        d=100,
        active_means=lambda: np.outer([2.0, 0.3, -0.3, -2.0], np.ones(15)),
        sizes=(100, 200, 200, 100),
    ),
}


def simulate_mixture(active_means, sizes, d, seed) -> Dataset:
    """Draw a labelled sample from a Gaussian mixture with unit variances.

    ``active_means`` is a K x m matrix of component means on the first m
    variables; the remaining d - m variables are N(0, 1) noise shared by
    all components. Component k contributes exactly ``sizes[k]`` rows, in
    block order. The returned dataset is standardized.
    """
    active_means = np.atleast_2d(np.asarray(active_means, dtype=float))
    sizes = np.asarray(sizes, dtype=int)
    k, m = active_means.shape
    if sizes.shape != (k,):
        raise DataError("need one component size per row of active_means")
    if (sizes <= 0).any():
        raise DataError("component sizes must be positive")
    if m > d:
        raise DataError(f"{m} active variables do not fit in dimension {d}")
    rng = np.random.default_rng(seed)
    n = int(sizes.sum())
    values = rng.standard_normal((n, d))
    labels = np.repeat(np.arange(1, k + 1), sizes)
    offset = 0
    for comp in range(k):
        values[offset : offset + sizes[comp], :m] += active_means[comp]
        offset += sizes[comp]
    return standardize(Dataset(values=values, labels=labels))


def simulate(experiment_id: str, seed) -> Dataset:
    """Generate one of the named benchmark datasets (standardized, labelled)."""
    try:
        spec = EXPERIMENTS[experiment_id]
    except KeyError:
        raise DataError(
            f"unknown experiment {experiment_id!r}; choose from {sorted(EXPERIMENTS)}"
        ) from None
    return simulate_mixture(spec["active_means"](), spec["sizes"], spec["d"], seed)


def true_active_set(experiment_id: str) -> tuple[int, ...]:
    """1-based indices of the discriminating variables of a named experiment."""
    spec = EXPERIMENTS[experiment_id]
    m = spec["active_means"]().shape[1]
    return tuple(range(1, m + 1))


def read_csv(path, has_header: bool = False, has_labels: bool = False) -> Dataset:
    """Load a dataset: one observation per row, optional final label column."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if has_header:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path} contains no data rows")
    try:
        matrix = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry ({exc})") from exc
    labels = None
    if has_labels:
        if matrix.shape[1] < 2:
            raise DataError(f"{path}: label column requested but only one column present")
        labels = matrix[:, -1]
        if not np.array_equal(labels, labels.astype(np.int64)):
            raise DataError(f"{path}: label column must be integer-valued")
        labels = labels.astype(np.int64)
        matrix = matrix[:, :-1]
    return Dataset(values=matrix, labels=labels)


def write_csv(path, values, labels=None, clusters=None, header: bool = False) -> None:
    """Write observations, mirroring the input layout plus a cluster column."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            cols = [f"v{j + 1}" for j in range(values.shape[1])]
            if labels is not None:
                cols.append("label")
            if clusters is not None:
                cols.append("cluster")
            writer.writerow(cols)
        for i in range(values.shape[0]):
            row = [repr(float(v)) for v in values[i]]
            if labels is not None:
                row.append(int(labels[i]))
            if clusters is not None:
                row.append(int(clusters[i]))
            writer.writerow(row)
