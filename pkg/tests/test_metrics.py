import itertools
import math

import numpy as np
import pytest

from mhgmm.gmm import Clustering, Configuration, GmmModel, Shape
from mhgmm.metrics import ari, contingency_table, mc_hellinger_sq


def _clust(labels):
    return Clustering(np.asarray(labels))


def pair_counting_ari(labels_a, labels_b):
    """Independent oracle: ARI from agreement counts over observation pairs."""
    n = len(labels_a)
    a = b = c = d = 0
    for i, j in itertools.combinations(range(n), 2):
        same_a = labels_a[i] == labels_a[j]
        same_b = labels_b[i] == labels_b[j]
        if same_a and same_b:
            a += 1
        elif same_a:
            b += 1
        elif same_b:
            c += 1
        else:
            d += 1
    num = 2 * (a * d - b * c)
    den = (a + b) * (b + d) + (a + c) * (c + d)
    if den == 0:
        return 1.0
    return num / den


def all_partitions(n):
    """Every partition of {0..n-1} as a label vector (restricted growth strings)."""
    out = []

    def grow(prefix, max_label):
        if len(prefix) == n:
            out.append(tuple(v + 1 for v in prefix))
            return
        for label in range(max_label + 2):
            grow(prefix + [label], max(max_label, label))

    grow([], -1)
    return out


def test_ari_identical_is_one():
    c = _clust([1, 1, 2, 3, 3])
    assert ari(c, c) == 1.0


def test_ari_hand_value():
    assert ari(_clust([1, 1, 2, 2]), _clust([1, 2, 1, 2])) == -0.5


def test_ari_exhaustive_matches_pair_counting_oracle():
    for n in range(2, 7):
        partitions = all_partitions(n)
        for pa in partitions:
            for pb in partitions:
                got = ari(_clust(pa), _clust(pb))
                want = pair_counting_ari(pa, pb)
                assert got == want, (pa, pb)


def test_ari_symmetry_and_label_permutation_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(3, 40))
        a = rng.integers(1, 5, n)
        b = rng.integers(1, 5, n)
        v = ari(_clust(a), _clust(b))
        assert v == ari(_clust(b), _clust(a))
        assert v <= 1.0
        perm = rng.permutation(10) + 1
        assert v == ari(_clust(perm[a - 1]), _clust(b))


def test_ari_length_mismatch():
    with pytest.raises(ValueError):
        ari(_clust([1, 2]), _clust([1, 2, 3]))


def test_contingency_marginals():
    table = contingency_table(_clust([1, 1, 2, 2, 3]), _clust([1, 2, 2, 2, 1]))
    assert table.n == 5
    assert table.row_sums.tolist() == [2, 2, 1]
    assert table.col_sums.tolist() == [2, 3]


def _gaussian_model(mu, d=1):
    return GmmModel(
        config=Configuration(1, (1,)),
        shape=Shape.LB,
        proportions=np.array([1.0]),
        means=np.array([[mu]]),
        variances=np.array([1.0]),
        d=d,
    )


def _std_normal_sampler(rng, n):
    return rng.standard_normal((n, 1))


def _std_normal_logpdf(x):
    return -0.5 * (math.log(2 * math.pi) + x[:, 0] ** 2)


def test_hellinger_same_density_is_zero():
    est, se = mc_hellinger_sq(_gaussian_model(0.0), _std_normal_sampler, _std_normal_logpdf, 5000, seed=1)
    assert est == 0.0
    assert se < 1e-12


@pytest.mark.parametrize("mu", [1.0, 2.0])
def test_hellinger_gaussian_closed_form(mu):
    est, se = mc_hellinger_sq(
        _gaussian_model(mu), _std_normal_sampler, _std_normal_logpdf, 100_000, seed=2
    )
    expected = 1.0 - math.exp(-(mu**2) / 8.0)
    assert abs(est - expected) <= 3 * se


def test_hellinger_monotone_in_separation():
    est1, _ = mc_hellinger_sq(_gaussian_model(1.0), _std_normal_sampler, _std_normal_logpdf, 20_000, seed=3)
    est2, _ = mc_hellinger_sq(_gaussian_model(2.0), _std_normal_sampler, _std_normal_logpdf, 20_000, seed=3)
    assert 0.0 <= est1 < est2 <= 1.0


def test_hellinger_standard_error_scales():
    ses = []
    for n_mc in (400, 1600, 6400):
        reps = [
            mc_hellinger_sq(_gaussian_model(1.0), _std_normal_sampler, _std_normal_logpdf, n_mc, seed=s)[0]
            for s in range(30)
        ]
        ses.append(np.std(reps, ddof=1))
    # quadrupling the sample should roughly halve the spread
    assert ses[0] / ses[1] == pytest.approx(2.0, rel=0.5)
    assert ses[1] / ses[2] == pytest.approx(2.0, rel=0.5)


def test_hellinger_reported_se_matches_replicate_spread():
    reps = []
    se_last = None
    for s in range(40):
        est, se_last = mc_hellinger_sq(
            _gaussian_model(1.0), _std_normal_sampler, _std_normal_logpdf, 2000, seed=s
        )
        reps.append(est)
    assert np.std(reps, ddof=1) == pytest.approx(se_last, rel=0.5)


def test_hellinger_validates_inputs():
    with pytest.raises(ValueError):
        mc_hellinger_sq(_gaussian_model(0.0), _std_normal_sampler, _std_normal_logpdf, 10)
    bad_logpdf = lambda x: np.full(x.shape[0], np.nan)
    with pytest.raises(ValueError):
        mc_hellinger_sq(_gaussian_model(0.0), _std_normal_sampler, bad_logpdf, 200)
