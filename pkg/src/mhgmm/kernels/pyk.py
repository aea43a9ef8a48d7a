"""NumPy implementations of the hot numeric kernels.

Twin of the compiled backend in ``_cyk.pyx``: same signatures, same update
order, same degeneracy handling, so either backend can serve the package.
All inputs are float64 and C-contiguous; the active-variable block of the
data is passed in already sliced.
"""

import numpy as np

LOG_2PI = 1.8378770664093453


def log_weights(x, means, variances, log_props):
    """Per-observation, per-component ln(p_k * N(x | mu_k, diag(sigma^2))).

    x: (n, s), means: (K, s), variances: (s,) shared across components,
    log_props: (K,). Returns an (n, K) array.
    """
    inv = 1.0 / variances
    const = log_props - 0.5 * (
        means.shape[1] * LOG_2PI + np.log(variances).sum() + (means * means) @ inv
    )
    # quadratic form expanded around the cross term so the n x K block is one GEMM
    cross = x @ (means * inv).T
    rowq = (x * x) @ inv
    return const[None, :] + cross - 0.5 * rowq[:, None]


def _nll_rows(x, props, means, variances):
    lw = log_weights(x, means, variances, np.log(np.maximum(props, 1e-300)))
    m = lw.max(axis=1)
    lse = m + np.log(np.exp(lw - m[:, None]).sum(axis=1))
    return lw, lse


def em_lb(x, props0, means0, variances0, tol, max_iter, var_floor):
    """EM for a K-component mixture with one shared diagonal covariance.

    Returns (props, means, variances, nll_path, n_iter) where nll_path[r] is
    the data NLL under the parameters entering iteration r and the last entry
    is the NLL of the returned parameters. A component whose weight falls
    below 1/(2n) is re-seeded once from the worst-fit point, then left as-is.
    """
    n = x.shape[0]
    p = np.array(props0, dtype=float, copy=True)
    mu = np.array(means0, dtype=float, copy=True)
    var = np.maximum(np.array(variances0, dtype=float, copy=True), var_floor)
    k = p.shape[0]
    reseeded = np.zeros(k, dtype=bool)
    threshold = 1.0 / (2.0 * n)
    sumsq = (x * x).sum(axis=0)

    path = []
    prev = np.inf
    it = 0
    while it < max_iter:
        lw, lse = _nll_rows(x, p, mu, var)
        nll = -lse.sum()
        path.append(nll)
        t = np.exp(lw - lse[:, None])

        nk = t.sum(axis=0)
        p = nk / n
        mu = (t.T @ x) / np.maximum(nk, 1e-300)[:, None]
        var = np.maximum((sumsq - nk @ (mu * mu)) / n, var_floor)

        it += 1
        low = np.flatnonzero((p < threshold) & ~reseeded)
        if low.size:
            order = np.argsort(lse, kind="stable")  # worst-fit points first
            for pos, kk in enumerate(low):
                mu[kk] = x[order[pos % n]]
                p[kk] = 1.0 / n
                reseeded[kk] = True
            p = p / p.sum()
            prev = np.inf  # never declare convergence on a re-seed step
            continue
        if np.isfinite(prev) and prev - nll <= tol * abs(prev):
            break
        prev = nll

    _, lse = _nll_rows(x, p, mu, var)
    path.append(-lse.sum())
    return p, mu, var, np.asarray(path), it


def lloyd(x, centers0, max_iter):
    """Lloyd iterations from the given initial centers.

    Returns (labels, centers, inertia, n_iter); labels are 0-based, ties go
    to the lowest center index, and a cluster left empty steals the point
    currently farthest from its assigned center.
    """
    n = x.shape[0]
    centers = np.array(centers0, dtype=float, copy=True)
    k = centers.shape[0]
    rowsq = (x * x).sum(axis=1)
    prev_labels = None
    for it in range(max_iter):
        d2 = rowsq[:, None] - 2.0 * (x @ centers.T) + (centers * centers).sum(axis=1)[None, :]
        labels = d2.argmin(axis=1)
        mind = d2[np.arange(n), labels]
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        prev_labels = labels

        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        empties = np.flatnonzero(~nonempty)
        if empties.size:
            order = np.argsort(-mind, kind="stable")
            for pos, kk in enumerate(empties):
                centers[kk] = x[order[pos % n]]

    d2 = rowsq[:, None] - 2.0 * (x @ centers.T) + (centers * centers).sum(axis=1)[None, :]
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels.astype(np.int64), centers, inertia, it + 1
