import os
import subprocess
import sys

import numpy as np
import pytest

from mhgmm import kernels
from mhgmm.kernels import pyk

try:
    from mhgmm.kernels import _cyk
except ImportError:
    _cyk = None

needs_ext = pytest.mark.skipif(_cyk is None, reason="compiled backend not built")


def _random_problem(rng, n=60, s=6, k=3):
    x = np.ascontiguousarray(rng.standard_normal((n, s)))
    means = np.ascontiguousarray(rng.standard_normal((k, s)))
    variances = rng.uniform(0.3, 2.0, s)
    props = rng.dirichlet(np.ones(k))
    return x, means, variances, props


@needs_ext
def test_log_weights_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, means, variances, props = _random_problem(rng)
        a = pyk.log_weights(x, means, variances, np.log(props))
        b = _cyk.log_weights(x, means, variances, np.log(props))
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


def test_log_weights_matches_naive():
    rng = np.random.default_rng(1)
    x, means, variances, props = _random_problem(rng, n=25, s=4, k=2)
    lw = kernels.log_weights(x, means, variances, np.log(props))
    for i in range(x.shape[0]):
        for k in range(means.shape[0]):
            dens = props[k] * np.prod(
                np.exp(-0.5 * (x[i] - means[k]) ** 2 / variances)
                / np.sqrt(2 * np.pi * variances)
            )
            assert abs(lw[i, k] - np.log(dens)) < 1e-10


@needs_ext
def test_em_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n, s, k = int(rng.integers(30, 80)), int(rng.integers(2, 6)), int(rng.integers(1, 4))
        x = np.ascontiguousarray(rng.standard_normal((n, s)))
        x[: n // 2] += 3.0
        means0 = np.ascontiguousarray(x[rng.choice(n, k, replace=False)])
        props0 = np.full(k, 1.0 / k)
        var0 = x.var(axis=0)
        out_py = pyk.em_lb(x, props0, means0, var0, 1e-6, 150, 1e-4)
        out_c = _cyk.em_lb(x, props0, means0, var0, 1e-6, 150, 1e-4)
        assert out_py[4] == out_c[4]
        np.testing.assert_allclose(out_py[3], out_c[3], rtol=1e-9, atol=1e-7)
        np.testing.assert_allclose(out_py[0], out_c[0], atol=1e-8)
        np.testing.assert_allclose(out_py[1], out_c[1], atol=1e-7)
        np.testing.assert_allclose(out_py[2], out_c[2], atol=1e-8)


@needs_ext
def test_lloyd_backends_agree():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, d, k = int(rng.integers(20, 60)), int(rng.integers(1, 5)), int(rng.integers(1, 5))
        x = np.ascontiguousarray(rng.standard_normal((n, d)))
        centers0 = np.ascontiguousarray(x[rng.choice(n, k, replace=False)])
        l_py, c_py, i_py, _ = pyk.lloyd(x, centers0, 100)
        l_c, c_c, i_c, _ = _cyk.lloyd(x, centers0, 100)
        np.testing.assert_array_equal(l_py, l_c)
        np.testing.assert_allclose(c_py, c_c, atol=1e-10)
        assert abs(i_py - i_c) < 1e-8


def test_em_reseeds_empty_component():
    # one far outlier: a 3-component fit started with two coincident centers
    # collapses a component, which must be re-seeded rather than left dead
    rng = np.random.default_rng(4)
    x = np.ascontiguousarray(rng.standard_normal((40, 2)) * 0.1)
    x[0] = [50.0, 50.0]
    means0 = np.zeros((3, 2))
    props0 = np.full(3, 1.0 / 3)
    p, mu, var, path, _ = kernels.em_lb(x, props0, means0, x.var(axis=0), 1e-8, 200, 1e-4)
    assert np.all(np.diff(path) <= 1e-8)
    # some component ends up on the outlier
    assert np.any(np.abs(mu - 50.0).max(axis=1) < 1.0)


def test_em_variance_floor():
    x = np.ascontiguousarray(np.array([[0.0], [0.0], [0.0], [1e-9]]))
    p, mu, var, path, _ = kernels.em_lb(x, np.ones(1), np.zeros((1, 1)), np.ones(1), 1e-8, 50, 1e-4)
    assert var[0] >= 1e-4


def test_backend_env_override():
    code = (
        "import mhgmm.kernels as k; print(k.BACKEND)"
    )
    env = dict(os.environ, MHGMM_KERNELS="py")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
