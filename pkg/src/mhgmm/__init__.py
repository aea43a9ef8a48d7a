"""Sparse model-based clustering for high-dimensional data.

Fits Gaussian mixtures constrained to a configuration eta = (K, S) — K
components whose means differ only on the active-variable set S, one shared
diagonal covariance on S, standard-normal noise elsewhere — and samples
configurations from a tempered posterior with a clustering-aware
Metropolis-Hastings chain. Post-treatment across sample splits votes a
final configuration and produces the clustering.
"""

from . import aggregate, data, metrics, mh, pipeline, prior
from .data import Dataset, simulate, split, standardize
from .gmm import (
    Clustering,
    Configuration,
    GmmModel,
    Shape,
    fit_em,
    free_params,
    log_density,
    map_clustering,
    neg_log_likelihood,
    responsibilities,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .kmeans import kmeans
from .metrics import ari, mc_hellinger_sq
from .mh import between_variance, run_chain
from .pipeline import RunConfig, run_experiment, run_pipeline
from .prior import PriorParams, log_prior

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Dataset",
    "Clustering",
    "Configuration",
    "GmmModel",
    "Shape",
    "RunConfig",
    "PriorParams",
    "standardize",
    "split",
    "simulate",
    "fit_em",
    "free_params",
    "log_density",
    "neg_log_likelihood",
    "responsibilities",
    "map_clustering",
    "kmeans",
    "between_variance",
    "run_chain",
    "log_prior",
    "ari",
    "mc_hellinger_sq",
    "run_pipeline",
    "run_experiment",
    "aggregate",
    "data",
    "metrics",
    "mh",
    "pipeline",
    "prior",
]
