"""Pure-Python kernels.

Operation order mirrors ``_core.pyx`` exactly so both backends return the
same floating-point results on IEEE-754 hardware.
"""

import math

BACKEND = "python"

# below this the root is smaller than any rate worth representing
_U_FLOOR = -700.0


def path_utility(r, trust, w1, w2):
    u = 0.0
    if w1 != 0.0:
        u += w1 * math.log1p(r)
    if w2 != 0.0 and r > 0.0:
        x = r / trust
        u -= w2 * x * math.log(x)
    return u


def best_response(q, trust, w1, w2, cap, max_newton=200):
    """Maximizer of ``w1 log(1+r) + w2 (-(r/T) log(r/T)) - q r`` on [0, cap]."""
    if w2 == 0.0:
        if w1 == 0.0:
            return 0.0
        if q <= 0.0:
            return cap
        r = w1 / q - 1.0
        if r < 0.0:
            return 0.0
        return cap if r > cap else r
    r = trust * math.exp(-1.0 - q * trust / w2)
    if w1 == 0.0 or r >= cap:
        return cap if r > cap else r
    if w1 / (1.0 + cap) - (w2 / trust) * (math.log(cap / trust) + 1.0) - q >= 0.0:
        return cap
    # Safeguarded Newton on u = log r. The stationarity residual g is
    # decreasing in u, and bounding w1 / (1 + r) between w1 / (1 + cap)
    # and w1 brackets the root.
    lt = math.log(trust)
    c = w2 / trust
    lo = lt - 1.0 + (w1 / (1.0 + cap) - q) / c
    hi = lt - 1.0 + (w1 - q) / c
    lc = math.log(cap)
    if hi > lc:
        hi = lc
    if lo < _U_FLOOR:
        lo = _U_FLOOR
        if w1 / (1.0 + math.exp(lo)) - c * (lo - lt + 1.0) - q <= 0.0:
            return 0.0
    u = hi
    for _ in range(max_newton):
        e = math.exp(u)
        g = w1 / (1.0 + e) - c * (u - lt + 1.0) - q
        if g > 0.0:
            lo = u
        else:
            hi = u
        dg = -w1 * e / ((1.0 + e) * (1.0 + e)) - c
        nu = u - g / dg
        if not (lo < nu < hi):
            nu = 0.5 * (lo + hi)
        done = abs(nu - u) <= 1e-15 * (abs(u) if abs(u) > 1.0 else 1.0)
        u = nu
        if done:
            break
    r = math.exp(u)
    return cap if r > cap else r


def dual_decomposition(path_ptr, path_links, path_src, n_src, trust, w1, w2,
                       caps, lam, t0, max_iter, tol, path_cap):
    """Subgradient dual decomposition.

    Returns ``(rates, lam, iterations, converged, dual_trace, resid_trace,
    src_trace)`` where ``lam`` is the multiplier vector that produced
    ``rates``. ``path_cap`` bounds each path's best response.
    """
    n_paths = len(path_ptr) - 1
    n_links = len(caps)
    lam = [float(x) for x in lam]
    rates = [0.0] * n_paths
    flow = [0.0] * n_links
    dual_trace = []
    resid_trace = []
    src_trace = []
    g_prev = 0.0
    streak = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = 0.0
        for p in range(n_paths):
            q = 0.0
            for k in range(path_ptr[p], path_ptr[p + 1]):
                q += lam[path_links[k]]
            r = best_response(q, trust[p], w1[p], w2[p], path_cap[p])
            rates[p] = r
            g += path_utility(r, trust[p], w1[p], w2[p]) - q * r
        for link in range(n_links):
            flow[link] = 0.0
            g += lam[link] * caps[link]
        for p in range(n_paths):
            for k in range(path_ptr[p], path_ptr[p + 1]):
                flow[path_links[k]] += rates[p]
        resid = 0.0
        for link in range(n_links):
            v = flow[link] - caps[link]
            if v > resid:
                resid = v
        dual_trace.append(g)
        resid_trace.append(resid)
        srow = [0.0] * n_src
        for p in range(n_paths):
            srow[path_src[p]] += rates[p]
        src_trace.append(srow)
        # three consecutive quiet iterations, so an oscillation that
        # momentarily repeats a dual value does not stop the loop
        if it > 1 and resid < tol and abs(g - g_prev) < tol:
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
        for link in range(n_links):
            v = lam[link] - step * (caps[link] - flow[link])
            lam[link] = v if v > 0.0 else 0.0
    return rates, lam, it, converged, dual_trace, resid_trace, src_trace


def ism_fixed_point(vouch_ptr, vouch_idx, trust, is_seed, tol, max_iter):
    """Jacobi iteration of ``1 - prod(1 - T_r * ISM_r)`` from the seed assignment.

    Returns ``(ism, iterations, residual, converged)``.
    """
    n = len(is_seed)
    cur = [1.0 if is_seed[j] else 0.0 for j in range(n)]
    nxt = [0.0] * n
    resid = 0.0
    for it in range(1, max_iter + 1):
        resid = 0.0
        for j in range(n):
            if is_seed[j]:
                v = 1.0
            else:
                prod = 1.0
                for k in range(vouch_ptr[j], vouch_ptr[j + 1]):
                    r = vouch_idx[k]
                    prod *= 1.0 - trust[r] * cur[r]
                v = 1.0 - prod
            nxt[j] = v
            d = v - cur[j]
            if d < 0.0:
                d = -d
            if d > resid:
                resid = d
        cur, nxt = nxt, cur
        if resid < tol:
            return cur, it, resid, True
    return cur, max_iter, resid, False
