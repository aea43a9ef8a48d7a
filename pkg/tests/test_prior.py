import itertools
import math

import numpy as np
import pytest

from mhgmm.gmm import Configuration
from mhgmm.prior import PriorParams, log_prior, log_prior_clust, log_prior_supp


def test_cluster_prior_values():
    params = PriorParams(d=10, K_max=10)
    assert abs(log_prior_clust(1, params) - (-1.0)) < 1e-15
    for k in range(1, 11):
        expected = math.log(math.exp(-1.0) / math.factorial(k))
        assert abs(log_prior_clust(k, params) - expected) < 1e-12


def test_support_prior_d2_empty_set():
    params = PriorParams(d=2)
    c2 = 1.0 + math.exp(-1.0) + math.exp(-2.0)
    assert abs(math.exp(log_prior_supp(0, params)) - 1.0 / c2) < 1e-12


@pytest.mark.parametrize("d", range(1, 13))
def test_support_prior_normalizes(d):
    params = PriorParams(d=d)
    total = sum(
        math.comb(d, s) * math.exp(log_prior_supp(s, params)) for s in range(d + 1)
    )
    assert abs(total - 1.0) < 1e-12


def test_separability_exact():
    params = PriorParams(d=6, K_max=5)
    for k in (1, 3, 5):
        for s in ((), (2,), (1, 4, 6)):
            config = Configuration(k, s)
            assert log_prior(config, params) == log_prior_clust(k, params) + log_prior_supp(
                len(s), params
            )


def test_per_subset_mass_decays_in_cardinality():
    # e^{-|S|} / binom(d,|S|) term: individual subsets lose mass as |S| grows
    # once |S| passes d/(1+e); exhaustive check at small d
    for d in (4, 6, 9):
        params = PriorParams(d=d)
        start = math.floor(d / (1 + math.e)) + 1
        values = [log_prior_supp(s, params) for s in range(start, d + 1)]
        assert all(a > b for a, b in zip(values, values[1:]))


def test_out_of_range_configurations_rejected():
    params = PriorParams(d=5, K_max=3)
    with pytest.raises(ValueError):
        log_prior(Configuration(4, (1,)), params)
    with pytest.raises(ValueError):
        log_prior(Configuration(2, (6,)), params)


def test_intensity_knob():
    params = PriorParams(d=3, K_max=5, intensity=2.0)
    expected = math.log(math.exp(-2.0) * 2.0**3 / math.factorial(3))
    assert abs(log_prior_clust(3, params) - expected) < 1e-12


def test_exhaustive_joint_normalization_small_d():
    # sum over K>=1 of pi_clust is 1 - e^{-1}; joint sums to that times 1
    d, k_max = 5, 60
    params = PriorParams(d=d, K_max=k_max)
    total = 0.0
    for k in range(1, k_max + 1):
        for size in range(d + 1):
            total += math.comb(d, size) * math.exp(
                log_prior_clust(k, params) + log_prior_supp(size, params)
            )
    assert abs(total - (1.0 - math.exp(-1.0))) < 1e-12
