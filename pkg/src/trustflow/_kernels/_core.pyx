# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: subgradient dual decomposition and ISM fixed point.

Keep the arithmetic order in lockstep with ``_fallback.py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, fabs

cnp.import_array()

BACKEND = "cython"

cdef double _U_FLOOR = -700.0


cdef inline double _utility(double r, double trust, double w1, double w2) noexcept nogil:
    cdef double u = 0.0
    cdef double x
    if w1 != 0.0:
        u += w1 * log1p(r)
    if w2 != 0.0 and r > 0.0:
        x = r / trust
        u -= w2 * x * log(x)
    return u


cdef double _best_response(double q, double trust, double w1, double w2,
                           double cap, int max_newton) noexcept nogil:
    cdef double r, lt, c, lo, hi, lc, u, e, g, dg, nu, au
    cdef bint done
    cdef int i
    if w2 == 0.0:
        if w1 == 0.0:
            return 0.0
        if q <= 0.0:
            return cap
        r = w1 / q - 1.0
        if r < 0.0:
            return 0.0
        return cap if r > cap else r
    r = trust * exp(-1.0 - q * trust / w2)
    if w1 == 0.0 or r >= cap:
        return cap if r > cap else r
    if w1 / (1.0 + cap) - (w2 / trust) * (log(cap / trust) + 1.0) - q >= 0.0:
        return cap
    lt = log(trust)
    c = w2 / trust
    lo = lt - 1.0 + (w1 / (1.0 + cap) - q) / c
    hi = lt - 1.0 + (w1 - q) / c
    lc = log(cap)
    if hi > lc:
        hi = lc
    if lo < _U_FLOOR:
        lo = _U_FLOOR
        if w1 / (1.0 + exp(lo)) - c * (lo - lt + 1.0) - q <= 0.0:
            return 0.0
    u = hi
    for i in range(max_newton):
        e = exp(u)
        g = w1 / (1.0 + e) - c * (u - lt + 1.0) - q
        if g > 0.0:
            lo = u
        else:
            hi = u
        dg = -w1 * e / ((1.0 + e) * (1.0 + e)) - c
        nu = u - g / dg
        if not (lo < nu and nu < hi):
            nu = 0.5 * (lo + hi)
        au = fabs(u)
        done = fabs(nu - u) <= 1e-15 * (au if au > 1.0 else 1.0)
        u = nu
        if done:
            break
    r = exp(u)
    return cap if r > cap else r


def path_utility(double r, double trust, double w1, double w2):
    return _utility(r, trust, w1, w2)


def best_response(double q, double trust, double w1, double w2, double cap,
                  int max_newton=200):
    return _best_response(q, trust, w1, w2, cap, max_newton)


def dual_decomposition(path_ptr, path_links, path_src, int n_src, trust, w1, w2,
                       caps, lam, double t0, int max_iter, double tol,
                       path_cap):
    cdef cnp.int64_t[::1] ptr = np.ascontiguousarray(path_ptr, dtype=np.int64)
    cdef cnp.int64_t[::1] links = np.ascontiguousarray(path_links, dtype=np.int64)
    cdef cnp.int64_t[::1] src = np.ascontiguousarray(path_src, dtype=np.int64)
    cdef double[::1] tr = np.ascontiguousarray(trust, dtype=np.float64)
    cdef double[::1] a1 = np.ascontiguousarray(w1, dtype=np.float64)
    cdef double[::1] a2 = np.ascontiguousarray(w2, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(caps, dtype=np.float64)
    cdef double[::1] pcap = np.ascontiguousarray(path_cap, dtype=np.float64)
    lam_arr = np.array(lam, dtype=np.float64, copy=True)
    cdef double[::1] lm = lam_arr
    cdef Py_ssize_t n_paths = ptr.shape[0] - 1
    cdef Py_ssize_t n_links = c.shape[0]
    rates_arr = np.zeros(n_paths, dtype=np.float64)
    cdef double[::1] rates = rates_arr
    flow_arr = np.zeros(n_links, dtype=np.float64)
    cdef double[::1] flow = flow_arr
    dual_arr = np.zeros(max_iter, dtype=np.float64)
    resid_arr = np.zeros(max_iter, dtype=np.float64)
    srcs_arr = np.zeros((max_iter, n_src), dtype=np.float64)
    cdef double[::1] dual_t = dual_arr
    cdef double[::1] resid_t = resid_arr
    cdef double[:, ::1] src_t = srcs_arr
    cdef double g, g_prev = 0.0, q, r, resid, v, step
    cdef Py_ssize_t p, k, l
    cdef int it = 0
    cdef int streak = 0
    cdef bint converged = False
    with nogil:
        it = 1
        while it <= max_iter:
            g = 0.0
            for p in range(n_paths):
                q = 0.0
                for k in range(ptr[p], ptr[p + 1]):
                    q += lm[links[k]]
                r = _best_response(q, tr[p], a1[p], a2[p], pcap[p], 200)
                rates[p] = r
                g += _utility(r, tr[p], a1[p], a2[p]) - q * r
            for l in range(n_links):
                flow[l] = 0.0
                g += lm[l] * c[l]
            for p in range(n_paths):
                for k in range(ptr[p], ptr[p + 1]):
                    flow[links[k]] += rates[p]
            resid = 0.0
            for l in range(n_links):
                v = flow[l] - c[l]
                if v > resid:
                    resid = v
            dual_t[it - 1] = g
            resid_t[it - 1] = resid
            for p in range(n_paths):
                src_t[it - 1, src[p]] += rates[p]
            if it > 1 and resid < tol and fabs(g - g_prev) < tol:
                streak += 1
            else:
                streak = 0
            if streak >= 3:
                converged = True
                break
            g_prev = g
            if it == max_iter:
                break
            step = t0 / it
            for l in range(n_links):
                v = lm[l] - step * (c[l] - flow[l])
                lm[l] = v if v > 0.0 else 0.0
            it += 1
    n = it
    return (rates_arr, lam_arr, n, bool(converged), dual_arr[:n].copy(),
            resid_arr[:n].copy(), srcs_arr[:n].copy())


def ism_fixed_point(vouch_ptr, vouch_idx, trust, is_seed, double tol, int max_iter):
    cdef cnp.int64_t[::1] ptr = np.ascontiguousarray(vouch_ptr, dtype=np.int64)
    cdef cnp.int64_t[::1] idx = np.ascontiguousarray(vouch_idx, dtype=np.int64)
    cdef double[::1] tr = np.ascontiguousarray(trust, dtype=np.float64)
    cdef cnp.uint8_t[::1] seed = np.ascontiguousarray(is_seed, dtype=np.uint8)
    cdef Py_ssize_t n = seed.shape[0]
    a_arr = np.zeros(n, dtype=np.float64)
    b_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] cur = a_arr
    cdef double[::1] nxt = b_arr
    cdef double[::1] tmp
    cdef double resid = 0.0, prod, v, d
    cdef Py_ssize_t j, k
    cdef int it
    cdef bint converged = False
    for j in range(n):
        cur[j] = 1.0 if seed[j] else 0.0
    with nogil:
        it = 1
        while it <= max_iter:
            resid = 0.0
            for j in range(n):
                if seed[j]:
                    v = 1.0
                else:
                    prod = 1.0
                    for k in range(ptr[j], ptr[j + 1]):
                        prod *= 1.0 - tr[idx[k]] * cur[idx[k]]
                    v = 1.0 - prod
                nxt[j] = v
                d = fabs(v - cur[j])
                if d > resid:
                    resid = d
            tmp = cur
            cur = nxt
            nxt = tmp
            if resid < tol:
                converged = True
                break
            if it == max_iter:
                break
            it += 1
    return np.asarray(cur).copy(), it, resid, bool(converged)
