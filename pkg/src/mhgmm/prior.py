"""Log-prior over configurations: Poisson on K times a sparsity prior on S.

pi_clust(K) = e^{-nu} nu^K / K! (nu = 1 by default, not renormalized over
K >= 1: constants cancel in Metropolis-Hastings ratios) and
pi_supp(S) = 1 / (binom(d, |S|) e^{|S|} C_d) with C_d = sum_{k=0}^d e^{-k},
which sums to 1 over all subsets of {1..d}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaln

from .gmm import Configuration

__all__ = ["PriorParams", "log_prior", "log_prior_clust", "log_prior_supp"]


@dataclass(frozen=True)
class PriorParams:
    d: int
    K_max: int = 10
    intensity: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.K_max < 1:
            raise ValueError("need d >= 1 and K_max >= 1")
        if self.intensity <= 0:
            raise ValueError("Poisson intensity must be positive")


def log_prior_clust(k: int, params: PriorParams) -> float:
    if not 1 <= k <= params.K_max:
        raise ValueError(f"K={k} outside the reachable range [1, {params.K_max}]")
    nu = params.intensity
    return -nu + k * math.log(nu) - float(gammaln(k + 1))


def log_prior_supp(s_size: int, params: PriorParams) -> float:
    d = params.d
    if not 0 <= s_size <= d:
        raise ValueError(f"|S|={s_size} outside [0, {d}]")
    log_binom = float(gammaln(d + 1) - gammaln(s_size + 1) - gammaln(d - s_size + 1))
    log_c_d = math.log(-math.expm1(-(d + 1))) - math.log(-math.expm1(-1.0))
    return -log_binom - s_size - log_c_d


def log_prior(config: Configuration, params: PriorParams) -> float:
    """ln pi(eta) = ln pi_clust(K) + ln pi_supp(S); exactly separable."""
    if config.size and max(config.S) > params.d:
        raise ValueError("S contains a variable index beyond d")
    return log_prior_clust(config.K, params) + log_prior_supp(config.size, params)
