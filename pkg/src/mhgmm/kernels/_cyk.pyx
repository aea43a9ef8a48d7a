"""Compiled twin of ``pyk``: EM, log-weight and Lloyd inner loops in C."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

cdef double LOG_2PI = 1.8378770664093453
cdef double TINY = 1e-300


def log_weights(const double[:, ::1] x, const double[:, ::1] means,
                const double[::1] variances, const double[::1] log_props):
    cdef Py_ssize_t n = x.shape[0], s = x.shape[1], k = means.shape[0]
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    inv_arr = np.empty(s, dtype=np.float64)
    cbase_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] inv = inv_arr
    cdef double[::1] cbase = cbase_arr
    cdef Py_ssize_t i, j, kk
    cdef double logdet = 0.0, acc, diff

    for j in range(s):
        inv[j] = 1.0 / variances[j]
        logdet += log(variances[j])
    for kk in range(k):
        cbase[kk] = log_props[kk] - 0.5 * (s * LOG_2PI + logdet)
    for i in range(n):
        for kk in range(k):
            acc = 0.0
            for j in range(s):
                diff = x[i, j] - means[kk, j]
                acc += diff * diff * inv[j]
            out[i, kk] = cbase[kk] - 0.5 * acc
    return out_arr


cdef double _estep(const double[:, ::1] x, double[::1] p, double[:, ::1] mu,
                   double[::1] var, double[:, ::1] t, double[::1] lse) except? -1.0:
    """Fill t with responsibilities and lse with per-point log-density; return NLL."""
    cdef Py_ssize_t n = x.shape[0], s = x.shape[1], k = p.shape[0]
    cdef Py_ssize_t i, j, kk
    cdef double logdet = 0.0, acc, diff, m, tot, nll = 0.0
    inv_arr = np.empty(s, dtype=np.float64)
    cbase_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] inv = inv_arr
    cdef double[::1] cbase = cbase_arr

    for j in range(s):
        inv[j] = 1.0 / var[j]
        logdet += log(var[j])
    for kk in range(k):
        cbase[kk] = log(p[kk] if p[kk] > TINY else TINY) - 0.5 * (s * LOG_2PI + logdet)
    for i in range(n):
        m = -1e308
        for kk in range(k):
            acc = 0.0
            for j in range(s):
                diff = x[i, j] - mu[kk, j]
                acc += diff * diff * inv[j]
            t[i, kk] = cbase[kk] - 0.5 * acc
            if t[i, kk] > m:
                m = t[i, kk]
        tot = 0.0
        for kk in range(k):
            tot += exp(t[i, kk] - m)
        lse[i] = m + log(tot)
        nll -= lse[i]
        for kk in range(k):
            t[i, kk] = exp(t[i, kk] - lse[i])
    return nll


def em_lb(const double[:, ::1] x, const double[::1] props0, const double[:, ::1] means0,
          const double[::1] variances0, double tol, int max_iter, double var_floor):
    cdef Py_ssize_t n = x.shape[0], s = x.shape[1], k = props0.shape[0]
    p_arr = np.array(props0, dtype=np.float64, copy=True)
    mu_arr = np.array(means0, dtype=np.float64, copy=True)
    var_arr = np.maximum(np.array(variances0, dtype=np.float64, copy=True), var_floor)
    t_arr = np.empty((n, k), dtype=np.float64)
    lse_arr = np.empty(n, dtype=np.float64)
    sumsq_arr = np.einsum("ij,ij->j", np.asarray(x), np.asarray(x))
    nk_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] p = p_arr
    cdef double[:, ::1] mu = mu_arr
    cdef double[::1] var = var_arr
    cdef double[:, ::1] t = t_arr
    cdef double[::1] lse = lse_arr
    cdef double[::1] sumsq = sumsq_arr
    cdef double[::1] nk = nk_arr
    reseeded_arr = np.zeros(k, dtype=np.uint8)
    cdef unsigned char[::1] reseeded = reseeded_arr
    cdef double threshold = 1.0 / (2.0 * n)
    cdef double prev = np.inf, nll, acc, psum, v
    cdef Py_ssize_t i, j, kk, it = 0, pos
    cdef bint collapsed
    path = []

    while it < max_iter:
        nll = _estep(x, p, mu, var, t, lse)
        path.append(nll)

        # M step: proportions, means, then the shared diagonal variances
        for kk in range(k):
            acc = 0.0
            for i in range(n):
                acc += t[i, kk]
            nk[kk] = acc
            p[kk] = acc / n
        for kk in range(k):
            acc = nk[kk] if nk[kk] > TINY else TINY
            for j in range(s):
                mu[kk, j] = 0.0
            for i in range(n):
                for j in range(s):
                    mu[kk, j] += t[i, kk] * x[i, j]
            for j in range(s):
                mu[kk, j] /= acc
        for j in range(s):
            v = sumsq[j]
            for kk in range(k):
                v -= nk[kk] * mu[kk, j] * mu[kk, j]
            v /= n
            var[j] = v if v > var_floor else var_floor

        it += 1
        collapsed = False
        for kk in range(k):
            if p[kk] < threshold and not reseeded[kk]:
                collapsed = True
        if collapsed:
            order = np.argsort(lse_arr, kind="stable")
            pos = 0
            psum = 0.0
            for kk in range(k):
                if p[kk] < threshold and not reseeded[kk]:
                    i = order[pos % n]
                    pos += 1
                    for j in range(s):
                        mu[kk, j] = x[i, j]
                    p[kk] = 1.0 / n
                    reseeded[kk] = 1
            for kk in range(k):
                psum += p[kk]
            for kk in range(k):
                p[kk] /= psum
            prev = np.inf
            continue
        if prev < np.inf and prev - nll <= tol * (prev if prev >= 0 else -prev):
            break
        prev = nll

    nll = _estep(x, p, mu, var, t, lse)
    path.append(nll)
    return p_arr, mu_arr, var_arr, np.asarray(path), it


def lloyd(const double[:, ::1] x, const double[:, ::1] centers0, int max_iter):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = centers0.shape[0]
    centers_arr = np.array(centers0, dtype=np.float64, copy=True)
    labels_arr = np.empty(n, dtype=np.int64)
    prev_arr = np.full(n, -1, dtype=np.int64)
    mind_arr = np.empty(n, dtype=np.float64)
    counts_arr = np.empty(k, dtype=np.int64)
    cdef double[:, ::1] centers = centers_arr
    cdef long long[::1] labels = labels_arr
    cdef long long[::1] prev = prev_arr
    cdef double[::1] mind = mind_arr
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t i, j, kk, it, best, pos
    cdef double dist, bd, diff, inertia
    cdef bint changed

    for it in range(max_iter):
        changed = False
        for i in range(n):
            best = 0
            bd = 1e308
            for kk in range(k):
                dist = 0.0
                for j in range(d):
                    diff = x[i, j] - centers[kk, j]
                    dist += diff * diff
                if dist < bd:
                    bd = dist
                    best = kk
            labels[i] = best
            mind[i] = bd
            if best != prev[i]:
                changed = True
        if not changed:
            break
        for i in range(n):
            prev[i] = labels[i]

        for kk in range(k):
            counts[kk] = 0
            for j in range(d):
                centers[kk, j] = 0.0
        for i in range(n):
            kk = labels[i]
            counts[kk] += 1
            for j in range(d):
                centers[kk, j] += x[i, j]
        pos = -1
        for kk in range(k):
            if counts[kk] > 0:
                for j in range(d):
                    centers[kk, j] /= counts[kk]
        empties = np.flatnonzero(np.asarray(counts_arr) == 0)
        if empties.size:
            order = np.argsort(-mind_arr, kind="stable")
            for pos in range(empties.size):
                i = order[pos % n]
                kk = empties[pos]
                for j in range(d):
                    centers[kk, j] = x[i, j]

    inertia = 0.0
    for i in range(n):
        best = 0
        bd = 1e308
        for kk in range(k):
            dist = 0.0
            for j in range(d):
                diff = x[i, j] - centers[kk, j]
                dist += diff * diff
            if dist < bd:
                bd = dist
                best = kk
        labels[i] = best
        inertia += bd
    return labels_arr, centers_arr, inertia, it + 1
