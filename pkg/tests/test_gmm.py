import json
import math

import numpy as np
import pytest

from mhgmm.gmm import (
    Clustering,
    Configuration,
    GmmModel,
    Shape,
    fit_em,
    free_params,
    log_densities,
    log_density,
    map_clustering,
    model_from_json,
    model_to_json,
    neg_log_likelihood,
    responsibilities,
)

LOG_2PI = math.log(2 * math.pi)


def _model(k, s, props, means, variances, d):
    return GmmModel(
        config=Configuration(k, tuple(s)),
        shape=Shape.LB,
        proportions=np.asarray(props, dtype=float),
        means=np.asarray(means, dtype=float).reshape(k, len(s)),
        variances=np.asarray(variances, dtype=float),
        d=d,
    )


def _noise_model(d, k=1):
    return GmmModel(
        config=Configuration(k, ()),
        shape=Shape.LB,
        proportions=np.full(k, 1.0 / k),
        means=np.zeros((k, 0)),
        variances=np.zeros(0),
        d=d,
    )


def _random_model(rng, d, k, s_size):
    s = tuple(sorted(rng.choice(np.arange(1, d + 1), size=s_size, replace=False).tolist()))
    props = rng.dirichlet(np.ones(k))
    means = rng.standard_normal((k, s_size))
    variances = rng.uniform(0.4, 1.8, s_size)
    return _model(k, s, props, means, variances, d)


def test_log_density_pure_noise_closed_form():
    rng = np.random.default_rng(0)
    model = _noise_model(d=7)
    for _ in range(10):
        x = rng.standard_normal(7)
        expected = -0.5 * (7 * LOG_2PI + (x**2).sum())
        assert abs(log_density(model, x) - expected) < 1e-12


def test_log_density_single_standard_component_reduces_to_noise():
    model = _model(1, (1,), [1.0], [[0.0]], [1.0], d=3)
    rng = np.random.default_rng(1)
    x = rng.standard_normal(3)
    expected = -0.5 * (3 * LOG_2PI + (x**2).sum())
    assert abs(log_density(model, x) - expected) < 1e-12


def test_log_density_two_component_hand_value():
    model = _model(2, (1,), [0.5, 0.5], [[-1.0], [1.0]], [1.0], d=1)
    # ln(0.5 phi(1) + 0.5 phi(-1)) = ln phi(1)
    assert abs(log_density(model, np.zeros(1)) - (-1.4189385332046727)) < 1e-12


def test_log_density_dimension_mismatch():
    model = _noise_model(d=4)
    with pytest.raises(ValueError):
        log_density(model, np.zeros(3))


def test_nll_additivity_and_naive_match():
    rng = np.random.default_rng(2)
    model = _random_model(rng, d=5, k=3, s_size=3)
    x = rng.standard_normal((20, 5))
    single = neg_log_likelihood(model, x)
    doubled = neg_log_likelihood(model, np.vstack([x, x]))
    assert abs(doubled - 2 * single) < 1e-8

    # naive non-log-domain evaluation
    cols = model.config.columns()
    comp = np.setdiff1d(np.arange(5), cols)
    total = 0.0
    for row in x:
        noise = np.prod(np.exp(-0.5 * row[comp] ** 2) / np.sqrt(2 * np.pi))
        mix = 0.0
        for k in range(model.config.K):
            mix += model.proportions[k] * np.prod(
                np.exp(-0.5 * (row[cols] - model.means[k]) ** 2 / model.variances)
                / np.sqrt(2 * np.pi * model.variances)
            )
        total -= np.log(noise * mix)
    assert abs(total - single) < 1e-8


def test_nll_minimal_at_true_mean():
    x = np.array([[2.0, -1.0]])
    best = _model(1, (1, 2), [1.0], [[2.0, -1.0]], [1.0, 1.0], d=2)
    for shift in ([0.5, 0.0], [0.0, -0.5], [1.0, 1.0]):
        other = _model(1, (1, 2), [1.0], [np.array([2.0, -1.0]) + shift], [1.0, 1.0], d=2)
        assert neg_log_likelihood(best, x) < neg_log_likelihood(other, x)


def test_nll_empty_subset_rejected():
    with pytest.raises(ValueError):
        neg_log_likelihood(_noise_model(3), np.zeros((0, 3)))


def test_responsibilities_rows_sum_to_one_and_naive_match():
    rng = np.random.default_rng(3)
    for _ in range(10):
        model = _random_model(rng, d=6, k=int(rng.integers(1, 5)), s_size=4)
        x = rng.standard_normal((15, 6))
        t = responsibilities(model, x)
        np.testing.assert_allclose(t.sum(axis=1), 1.0, atol=1e-12)
        cols = model.config.columns()
        for i in range(3):
            dens = np.array(
                [
                    model.proportions[k]
                    * np.prod(
                        np.exp(-0.5 * (x[i, cols] - model.means[k]) ** 2 / model.variances)
                        / np.sqrt(2 * np.pi * model.variances)
                    )
                    for k in range(model.config.K)
                ]
            )
            np.testing.assert_allclose(t[i], dens / dens.sum(), atol=1e-10)


def test_responsibilities_k1_and_symmetry():
    model1 = _model(1, (1,), [1.0], [[0.3]], [1.0], d=2)
    t = responsibilities(model1, np.random.default_rng(0).standard_normal((8, 2)))
    np.testing.assert_allclose(t, 1.0)

    model2 = _model(2, (1,), [0.5, 0.5], [[-2.0], [2.0]], [1.0], d=1)
    t = responsibilities(model2, np.zeros((1, 1)))
    np.testing.assert_allclose(t, [[0.5, 0.5]], atol=1e-12)


def test_map_clustering_matches_responsibility_argmax():
    rng = np.random.default_rng(4)
    model = _random_model(rng, d=6, k=4, s_size=3)
    x = rng.standard_normal((40, 6))
    labels = map_clustering(model, x).labels
    np.testing.assert_array_equal(labels, responsibilities(model, x).argmax(axis=1) + 1)


def test_map_clustering_tie_goes_to_lowest_index():
    model = _model(2, (1,), [0.5, 0.5], [[-1.0], [1.0]], [1.0], d=1)
    labels = map_clustering(model, np.zeros((1, 1))).labels
    assert labels[0] == 1
    assert map_clustering(_noise_model(2, k=1), np.ones((5, 2))).labels.tolist() == [1] * 5


@pytest.mark.parametrize(
    "k,s_size,expected", [(1, 0, 0), (2, 15, 46), (3, 20, 82)]
)
def test_free_params(k, s_size, expected):
    config = Configuration(k, tuple(range(1, s_size + 1)))
    assert free_params(config) == expected


def test_free_params_paper_convention():
    config = Configuration(2, tuple(range(1, 16)))
    assert free_params(config, paper_convention=True) == 3 * 15 - 1


def test_fit_em_k1_closed_form():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((50, 4)) * 2 + 1
    config = Configuration(1, (2, 4))
    model = fit_em(x, config, seed=0)
    block = x[:, [1, 3]]
    np.testing.assert_allclose(model.means[0], block.mean(axis=0), atol=1e-8)
    np.testing.assert_allclose(model.variances, block.var(axis=0), atol=1e-6)
    np.testing.assert_allclose(model.proportions, [1.0])


def test_fit_em_two_separated_clusters():
    rng = np.random.default_rng(6)
    x = np.concatenate([rng.normal(-5, 1, 120), rng.normal(5, 1, 80)])[:, None]
    model = fit_em(x, Configuration(2, (1,)), seed=1)
    means = np.sort(model.means.ravel())
    assert abs(means[0] + 5) < 0.2 and abs(means[1] - 5) < 0.2
    props = np.sort(model.proportions)
    assert abs(props[0] - 0.4) < 0.1 and abs(props[1] - 0.6) < 0.1


def test_fit_em_monotone_and_deterministic():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((60, 5))
    config = Configuration(3, (1, 3, 5))
    a = fit_em(x, config, seed=42)
    b = fit_em(x, config, seed=42)
    assert np.all(np.diff(a.fit_nll_path) <= 1e-8)
    np.testing.assert_array_equal(a.means, b.means)
    np.testing.assert_array_equal(a.proportions, b.proportions)
    np.testing.assert_array_equal(a.variances, b.variances)


def test_fit_em_rejects_k_above_n():
    with pytest.raises(ValueError):
        fit_em(np.zeros((3, 2)) + np.arange(3)[:, None], Configuration(4, (1,)), seed=0)


def test_fit_em_empty_support_is_noise_model():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((30, 4))
    model = fit_em(x, Configuration(2, ()), seed=0)
    expected = -log_densities(_noise_model(4, k=2), x).sum()
    assert abs(model.fit_nll - expected) < 1e-10


def test_model_json_roundtrip_bit_faithful():
    rng = np.random.default_rng(9)
    model = _random_model(rng, d=8, k=3, s_size=4)
    text = model_to_json(model)
    back = model_from_json(text)
    assert back.config == model.config
    np.testing.assert_array_equal(back.proportions, model.proportions)
    np.testing.assert_array_equal(back.means, model.means)
    np.testing.assert_array_equal(back.variances, model.variances)
    assert json.loads(text)["shape"] == "LB"
    assert model_to_json(back) == text


def test_model_validation():
    with pytest.raises(ValueError):
        _model(2, (1,), [0.6, 0.6], [[0.0], [1.0]], [1.0], d=2)
    with pytest.raises(ValueError):
        _model(2, (1,), [0.5, 0.5], [[0.0], [1.0]], [-1.0], d=2)
    with pytest.raises(ValueError):
        _model(1, (5,), [1.0], [[0.0]], [1.0], d=2)
    with pytest.raises(ValueError):
        Clustering(np.array([0, 1]))
    with pytest.raises(ValueError):
        Configuration(0, ())
