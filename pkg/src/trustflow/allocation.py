"""Trust-constrained multipath flow allocation.

Each source ``s`` spreads its rate over admissible paths to maximize

    U_s(r) = sum_pi log(1 + r_pi) + mu_s * sum_pi -(r_pi / T_pi) log(r_pi / T_pi)

subject to link capacities. :func:`solve_distributed` is the dual
decomposition with per-link multipliers and diminishing subgradient steps.
:func:`solve_centralized_reference` solves the same concave program with a
primal log-barrier Newton method and is used as an oracle.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError
from .network import PathSet, path_links

UTILITIES = ("combined", "diversity")


def utility_throughput(rates: Sequence[float]) -> float:
    """``sum log(1 + r)``."""
    total = 0.0
    for r in rates:
        if r < 0:
            raise DomainError("rates must be nonnegative")
        total += math.log1p(r)
    return total


def utility_diversity(rates: Sequence[float], trusts: Sequence[float]) -> float:
    """``sum -(r/T) log(r/T)`` with ``0 log 0 = 0``."""
    total = 0.0
    for r, t in zip(rates, trusts, strict=True):
        if r < 0:
            raise DomainError("rates must be nonnegative")
        if r == 0:
            continue
        if t <= 0:
            raise DomainError("positive rate on a path with zero trust")
        x = r / t
        total -= x * math.log(x)
    return total


def _weights(utility: str, mu: float) -> tuple:
    if utility == "combined":
        return 1.0, float(mu)
    if utility == "diversity":
        return 0.0, 1.0
    raise DomainError(f"unknown utility {utility!r}; expected one of {UTILITIES}")


def per_source_best_response(trusts: Sequence[float], q: Sequence[float], mu: float = 0.0,
                             utility: str = "combined", rate_cap: float = math.inf) -> np.ndarray:
    """Maximize ``U_s(r) - q . r`` path by path on ``[0, rate_cap]``.

    Throughput only has the closed form ``max(0, 1/q - 1)``; diversity only
    has ``T exp(-1 - q T / mu)``. The mixed case is the unique root of the
    strictly decreasing derivative, found by a monotone Newton iteration.
    """
    w1, w2 = _weights(utility, mu)
    out = np.empty(len(q))
    for p, (t, qp) in enumerate(zip(trusts, q, strict=True)):
        if qp < 0:
            raise DomainError("multiplier sums must be nonnegative")
        if w2 > 0 and t <= 0:
            raise DomainError("diversity utility needs positive path trust")
        out[p] = _kernels.best_response(float(qp), float(t), w1, w2, float(rate_cap))
    return out


# --------------------------------------------------------------------------
# Problem and result types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceFlows:
    """One source with its admissible paths and their trust values."""

    source: object
    paths: tuple
    trusts: tuple
    mu: float = 0.0

    def __post_init__(self):
        if len(self.paths) != len(self.trusts):
            raise DomainError("one trust value per path required")
        if self.mu < 0:
            raise DomainError("mu must be nonnegative")
        for t in self.trusts:
            if not 0.0 <= t <= 1.0:
                raise DomainError("path trust must lie in [0, 1]")

    @classmethod
    def from_path_set(cls, path_set: PathSet, trusts: Sequence[float], mu: float = 0.0):
        return cls(path_set.source, tuple(tuple(p) for p in path_set), tuple(trusts), mu)


@dataclass(frozen=True)
class AllocationProblem:
    """Sources with admissible paths sharing capacitated links."""

    sources: tuple
    capacities: Mapping
    utility: str = "combined"
    tau_t: float = 0.0
    tau_s: float = 0.0

    def __post_init__(self):
        _weights(self.utility, 0.0)
        for link, c in self.capacities.items():
            if not (c >= 0 and math.isfinite(c)):
                raise DomainError(f"capacity of {link!r} must be finite and >= 0")
        for src in self.sources:
            for p in src.paths:
                for lk in path_links(p):
                    if lk not in self.capacities:
                        raise DomainError(f"path of {src.source!r} uses unknown link {lk!r}")

    @property
    def links(self) -> list:
        return sorted(self.capacities)

    def path_keys(self) -> list:
        return [(s.source, p) for s in self.sources for p in s.paths]

    def objective(self, rates: Mapping) -> float:
        """Sum of source utilities at ``rates`` keyed by ``(source, path)``."""
        total = 0.0
        for s in self.sources:
            w1, w2 = _weights(self.utility, s.mu)
            for p, t in zip(s.paths, s.trusts):
                total += _kernels.path_utility(float(rates[(s.source, p)]), t, w1, w2)
        return total

    def link_flows(self, rates: Mapping) -> dict:
        flow = {lk: 0.0 for lk in self.capacities}
        for (src, p), r in rates.items():
            for lk in path_links(p):
                flow[lk] += r
        return flow

    def max_violation(self, rates: Mapping) -> float:
        flow = self.link_flows(rates)
        return max([flow[lk] - c for lk, c in self.capacities.items()] + [0.0])

    def total_capacity(self) -> float:
        return float(sum(self.capacities.values()))


@dataclass
class FlowAllocation:
    rates: dict
    source_rate: dict

    @classmethod
    def from_rates(cls, problem: AllocationProblem, rates: Mapping) -> "FlowAllocation":
        rates = {k: float(rates[k]) for k in problem.path_keys()}
        src = {}
        for s in problem.sources:
            src[s.source] = sum(rates[(s.source, p)] for p in s.paths)
        return cls(rates, src)

    def rate(self, source, path) -> float:
        return self.rates[(source, tuple(path))]


@dataclass
class DualState:
    """Per-link multipliers after ``iteration`` subgradient steps."""

    lam: dict
    iteration: int = 1
    step_scale: float = 1.0
    dual_value: float = math.nan
    primal_residual: float = math.nan

    def __post_init__(self):
        if self.iteration < 1:
            raise DomainError("iteration counter starts at 1")
        if self.step_scale <= 0:
            raise DomainError("t0 must be positive")


@dataclass
class SolverTrace:
    """Per-iteration dual value, primal residual and per-source rate."""

    sources: list
    dual_value: np.ndarray
    primal_residual: np.ndarray
    source_rates: np.ndarray

    def __len__(self):
        return len(self.dual_value)

    def best_dual(self) -> np.ndarray:
        return np.minimum.accumulate(self.dual_value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "dual_value", "primal_residual"]
                   + [f"rate_{s}" for s in self.sources])
        for it in range(len(self)):
            w.writerow([it + 1, repr(float(self.dual_value[it])),
                        repr(float(self.primal_residual[it]))]
                       + [repr(float(x)) for x in self.source_rates[it]])
        return buf.getvalue()


@dataclass
class DistributedResult:
    allocation: FlowAllocation
    dual: DualState
    trace: SolverTrace
    converged: bool
    raw_rates: dict = field(default_factory=dict)


def subgradient_step(dual: DualState, flows: Mapping, capacities: Mapping) -> DualState:
    """``lam <- max(0, lam - (t0/t)(c - flow))`` and advance the counter.

    ``flows`` maps each link to its aggregate rate.
    """
    step = dual.step_scale / dual.iteration
    lam = {}
    for lk, c in capacities.items():
        v = dual.lam.get(lk, 0.0) - step * (c - flows.get(lk, 0.0))
        lam[lk] = v if v > 0.0 else 0.0
    return DualState(lam, dual.iteration + 1, dual.step_scale)


def repair_feasibility(problem: AllocationProblem, rates: Mapping, tol: float = 0.0) -> dict:
    """Scale path rates on the most oversubscribed link until all fit."""
    rates = dict(rates)
    crossing = {lk: [] for lk in problem.capacities}
    for key in rates:
        for lk in path_links(key[1]):
            crossing[lk].append(key)
    for _ in range(len(crossing) + 1):
        flow = problem.link_flows(rates)
        worst, excess = None, tol
        for lk in sorted(problem.capacities):
            over = flow[lk] - problem.capacities[lk]
            if over > excess:
                worst, excess = lk, over
        if worst is None:
            break
        scale = problem.capacities[worst] / flow[worst]
        for key in crossing[worst]:
            rates[key] *= scale
    return rates


def _flatten(problem: AllocationProblem):
    links = problem.links
    index = {lk: k for k, lk in enumerate(links)}
    ptr, idx, src, trust, w1, w2 = [0], [], [], [], [], []
    for si, s in enumerate(problem.sources):
        a, b = _weights(problem.utility, s.mu)
        for p, t in zip(s.paths, s.trusts):
            if b > 0 and t <= 0:
                raise DomainError("diversity utility needs positive path trust")
            idx.extend(index[lk] for lk in path_links(p))
            ptr.append(len(idx))
            src.append(si)
            trust.append(t)
            w1.append(a)
            w2.append(b)
    caps = [float(problem.capacities[lk]) for lk in links]
    return links, ptr, idx, src, trust, w1, w2, caps


def solve_distributed(problem: AllocationProblem, max_iter: int = 5000, tol: float = 1e-6,
                      t0: float = 1.0, rate_cap: float | None = None,
                      lam0: Mapping | None = None) -> DistributedResult:
    """Dual decomposition with subgradient multiplier updates.

    Parameters
    ----------
    t0 : float
        Step scale of the diminishing step ``t0 / t``.
    rate_cap : float, optional
        Upper bound on every path rate, default ten times the total
        capacity. Each path is further capped at its bottleneck capacity.
    lam0 : mapping, optional
        Initial multipliers; default ``1/(1 + c_l)``, the price at which a
        lone throughput path saturates its link.

    Returns
    -------
    DistributedResult
        Repaired feasible allocation, final multipliers, trace and a
        convergence flag. ``raw_rates`` holds the unrepaired best responses.
    """
    if max_iter < 1:
        raise DomainError("max_iter must be >= 1")
    if tol <= 0:
        raise DomainError("tol must be positive")
    t0 = float(t0)
    if t0 <= 0:
        raise DomainError("t0 must be positive")
    if rate_cap is None:
        rate_cap = 10.0 * problem.total_capacity()
    names = [s.source for s in problem.sources]
    keys = problem.path_keys()
    links = problem.links
    if not keys:
        zero = FlowAllocation.from_rates(problem, {})
        lam = {lk: 0.0 for lk in links}
        trace = SolverTrace(names, np.zeros(0), np.zeros(0), np.zeros((0, len(names))))
        return DistributedResult(zero, DualState(lam, 1, t0, 0.0, 0.0), trace, True, {})
    links, ptr, idx, src, trust, w1, w2, caps = _flatten(problem)
    if lam0 is None:
        lam_init = [1.0 / (1.0 + c) for c in caps]
    else:
        lam_init = [float(lam0.get(lk, 0.0)) for lk in links]
        if min(lam_init, default=0.0) < 0:
            raise DomainError("initial multipliers must be nonnegative")
    rates, lam, iters, ok, dual_t, resid_t, src_t = _kernels.dual_decomposition(
        np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64),
        np.asarray(src, dtype=np.int64), len(names), np.asarray(trust, dtype=float),
        np.asarray(w1, dtype=float), np.asarray(w2, dtype=float),
        np.asarray(caps, dtype=float), np.asarray(lam_init, dtype=float),
        t0, int(max_iter), float(tol), path_caps(problem, rate_cap))
    raw = {k: float(r) for k, r in zip(keys, rates)}
    fixed = repair_feasibility(problem, raw)
    trace = SolverTrace(names, np.asarray(dual_t, dtype=float),
                        np.asarray(resid_t, dtype=float), np.asarray(src_t, dtype=float))
    dual = DualState({lk: float(v) for lk, v in zip(links, lam)}, int(iters), t0,
                     float(trace.dual_value[-1]), float(trace.primal_residual[-1]))
    return DistributedResult(FlowAllocation.from_rates(problem, fixed), dual, trace,
                             bool(ok), raw)


def path_caps(problem: AllocationProblem, rate_cap: float | None = None) -> np.ndarray:
    """Per-path rate bound ``min(rate_cap, bottleneck capacity)``.

    Any capacity-feasible allocation satisfies it, so the bound leaves the
    primal optimum unchanged while keeping early best responses bounded.
    """
    if rate_cap is None:
        rate_cap = 10.0 * problem.total_capacity()
    out = [min(rate_cap, min(problem.capacities[lk] for lk in path_links(p)))
           for s in problem.sources for p in s.paths]
    return np.asarray(out, dtype=float)


def dual_value(problem: AllocationProblem, lam: Mapping, rate_cap: float | None = None) -> float:
    """``g(lam) = sum_p max_r [U_p(r) - q_p r] + lam . c`` over the path caps."""
    caps = iter(path_caps(problem, rate_cap))
    g = sum(lam.get(lk, 0.0) * c for lk, c in problem.capacities.items())
    for s in problem.sources:
        w1, w2 = _weights(problem.utility, s.mu)
        for p, t in zip(s.paths, s.trusts):
            q = sum(lam.get(lk, 0.0) for lk in path_links(p))
            r = _kernels.best_response(q, t, w1, w2, float(next(caps)))
            g += _kernels.path_utility(r, t, w1, w2) - q * r
    return g


# --------------------------------------------------------------------------
# Centralized oracle
# --------------------------------------------------------------------------

def solve_centralized_reference(problem: AllocationProblem, tol: float = 1e-9,
                                method: str = "barrier", max_iter: int = 20000) -> FlowAllocation:
    """Centralized solution of the allocation program.

    ``method="barrier"`` (default) runs a primal log-barrier Newton method
    until the duality-gap bound falls below ``tol``. ``method="pga"`` runs
    projected gradient ascent with per-link rescaling and keeps the best
    feasible iterate; it is cheaper but only approximately optimal.
    """
    keys = problem.path_keys()
    if not keys:
        return FlowAllocation.from_rates(problem, {})
    if method == "barrier":
        rates = _barrier(problem, tol)
    elif method == "pga":
        rates = _pga(problem, max_iter)
    else:
        raise DomainError(f"unknown method {method!r}")
    return FlowAllocation.from_rates(problem, dict(zip(keys, rates)))


def _path_data(problem: AllocationProblem):
    links, ptr, idx, src, trust, w1, w2, caps = _flatten(problem)
    n = len(ptr) - 1
    a = np.zeros((len(links), n))
    for p in range(n):
        a[idx[ptr[p]:ptr[p + 1]], p] = 1.0
    return a, np.asarray(caps), np.asarray(trust), np.asarray(w1), np.asarray(w2)


def _grad_hess(r, trust, w1, w2):
    g = w1 / (1.0 + r)
    h = -w1 / (1.0 + r) ** 2
    pos = w2 > 0
    g = g + np.where(pos, -(w2 / np.where(pos, trust, 1.0)) * (np.log(r / np.where(pos, trust, 1.0)) + 1.0), 0.0)
    h = h + np.where(pos, -w2 / (np.where(pos, trust, 1.0) * r), 0.0)
    return g, h


def _objective(r, trust, w1, w2):
    return sum(_kernels.path_utility(float(x), float(t), float(a), float(b))
               for x, t, a, b in zip(r, trust, w1, w2))


def _barrier(problem: AllocationProblem, tol: float) -> np.ndarray:
    a, caps, trust, w1, w2 = _path_data(problem)
    n = a.shape[1]
    out = np.zeros(n)
    # paths over a zero-capacity link carry nothing
    blocked = (a[caps <= 0].sum(axis=0) > 0) if (caps <= 0).any() else np.zeros(n, bool)
    live = ~blocked
    if not live.any():
        return out
    a = a[:, live]
    rows = a.sum(axis=1) > 0
    a, caps = a[rows], caps[rows]
    trust, w1, w2 = trust[live], w1[live], w2[live]
    m = a.shape[0] + a.shape[1]
    # strictly interior start
    r = np.full(a.shape[1], 0.5 * (caps / np.maximum(a.sum(axis=1), 1.0)).min())

    def phi(x, t):
        slack = caps - a @ x
        if (slack <= 0).any() or (x <= 0).any():
            return -math.inf
        return t * _objective(x, trust, w1, w2) + np.log(slack).sum() + np.log(x).sum()

    t = 1.0
    while True:
        for _ in range(200):
            slack = caps - a @ r
            g, h = _grad_hess(r, trust, w1, w2)
            grad = t * g - a.T @ (1.0 / slack) + 1.0 / r
            hess = (np.diag(t * h - 1.0 / r ** 2)
                    - a.T @ np.diag(1.0 / slack ** 2) @ a)
            step = np.linalg.solve(hess, -grad)
            dec = grad @ step
            if dec / 2.0 <= 1e-12:
                break
            s = 1.0
            f0 = phi(r, t)
            while s > 1e-16:
                cand = r + s * step
                if phi(cand, t) >= f0 + 0.25 * s * grad @ step:
                    break
                s *= 0.5
            r = r + s * step
        if m / t < tol:
            break
        t *= 8.0
    out[live] = r
    return out


def _pga(problem: AllocationProblem, max_iter: int) -> np.ndarray:
    a, caps, trust, w1, w2 = _path_data(problem)
    keys = problem.path_keys()
    r = np.zeros(a.shape[1])
    best, best_val = r.copy(), _objective(r, trust, w1, w2)
    step0 = max(caps.max(initial=0.0), 1.0)
    for it in range(1, max_iter + 1):
        g, _ = _grad_hess(np.maximum(r, 1e-300), trust, w1, w2)
        r = np.maximum(r + (step0 / math.sqrt(it)) * g, 0.0)
        fixed = repair_feasibility(problem, dict(zip(keys, r)))
        r = np.array([fixed[k] for k in keys])
        val = _objective(r, trust, w1, w2)
        if val > best_val:
            best, best_val = r.copy(), val
    return best


def random_instance(rng: np.random.Generator, utility: str = "combined", mu: float = 0.0,
                    max_sources: int = 4, max_links: int = 10, max_paths: int = 3,
                    cap_range: tuple = (0.5, 20.0)) -> AllocationProblem:
    """Random allocation problem on a chain with chords.

    Nodes ``0..n`` form a chain, random forward chords are added up to
    ``max_links`` links, and each source draws up to ``max_paths`` of the
    simple forward paths between two random nodes. Trusts are uniform in
    [0.3, 1] and capacities uniform in ``cap_range``.
    """
    n = int(rng.integers(3, 6))
    caps = {(i, i + 1): float(rng.uniform(*cap_range)) for i in range(n)}
    while len(caps) < max_links and rng.random() < 0.8:
        i, j = sorted(int(v) for v in rng.choice(n + 1, 2, replace=False))
        caps.setdefault((i, j), float(rng.uniform(*cap_range)))
    adj = {}
    for i, j in sorted(caps):
        adj.setdefault(i, []).append(j)

    def walks(v, d, acc):
        if v == d:
            yield tuple(acc)
            return
        for u in adj.get(v, ()):
            if u <= d:
                yield from walks(u, d, acc + [u])

    sources = []
    for k in range(int(rng.integers(1, max_sources + 1))):
        s, d = sorted(int(v) for v in rng.choice(n + 1, 2, replace=False))
        ps = list(walks(s, d, [s]))
        order = rng.permutation(len(ps))
        ps = [ps[i] for i in order[:max_paths]]
        sources.append(SourceFlows(k, tuple(ps), tuple(float(rng.uniform(0.3, 1.0)) for _ in ps),
                                   mu))
    return AllocationProblem(tuple(sources), caps, utility)


def trace_csv(result: DistributedResult) -> str:
    return result.trace.to_csv()


def allocation_csv(allocation: FlowAllocation) -> str:
    """``source,path,rate`` with nodes joined by ``-``; input order kept."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "path", "rate"])
    for (s, p), r in allocation.rates.items():
        w.writerow([s, "-".join(map(str, p)), repr(float(r))])
    return buf.getvalue()
