"""Identity-spoofing metric over a voucher graph.

``ISM(i, j)`` is the probability that at least one voucher of ``j`` is
valid, ``1 - prod_r (1 - T_ir * ISM(i, r))``, anchored at the identities
``i`` verified independently. It is evaluated as the least fixed point
above the seed assignment by monotone Jacobi iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DomainError, InputError


@dataclass
class VoucherGraph:
    """Who vouches for whom, per-observer seed sets and pairwise trust.

    ``vouchers[j]`` is the set ``R_j``; ``seeds[i]`` the identities ``i``
    verified itself; ``trust[(i, r)]`` the combined trust ``T_ir``. Missing
    trust entries count as 0 unless ``default_trust`` says otherwise.
    """

    vouchers: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    trust: dict = field(default_factory=dict)
    default_trust: float = 0.0

    def __post_init__(self):
        for j, rs in self.vouchers.items():
            if j in rs:
                raise InputError(f"node {j!r} vouches for itself")

    def nodes(self) -> list:
        ns = set(self.vouchers)
        for rs in self.vouchers.values():
            ns.update(rs)
        for i, ss in self.seeds.items():
            ns.add(i)
            ns.update(ss)
        for i, r in self.trust:
            ns.add(i)
            ns.add(r)
        return sorted(ns, key=str)


@dataclass(frozen=True)
class IsmResult:
    observer: Hashable
    values: dict
    iterations: int
    residual: float

    def __getitem__(self, node):
        return self.values[node]


def compute_ism(graph: VoucherGraph, observer, tol: float = 1e-9,
                max_iter: int = 1000) -> IsmResult:
    """ISM of ``observer`` in every node of ``graph``.

    Raises
    ------
    DomainError
        If the observer has no verified seed or ``tol`` is not positive.
    ConvergenceError
        If the per-entry change is still ``>= tol`` after ``max_iter``
        sweeps.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    seeds = set(graph.seeds.get(observer, ()))
    if not seeds:
        raise DomainError(f"observer {observer!r} has no verified identities")
    nodes = graph.nodes()
    index = {v: k for k, v in enumerate(nodes)}
    trust = np.array([1.0 if v == observer else
                      graph.trust.get((observer, v), graph.default_trust) for v in nodes])
    is_seed = np.array([v in seeds or v == observer for v in nodes], dtype=np.uint8)
    ptr = [0]
    idx = []
    for v in nodes:
        idx.extend(sorted(index[r] for r in graph.vouchers.get(v, ())))
        ptr.append(len(idx))
    values, iters, resid, ok = ism_arrays(ptr, idx, trust, is_seed, tol, max_iter)
    if not ok:
        raise ConvergenceError(
            f"ISM did not converge in {max_iter} iterations (residual {resid:.3g})",
            residual=resid, iterations=iters)
    return IsmResult(observer, {v: float(values[k]) for v, k in index.items()}, iters, resid)


def ism_arrays(vouch_ptr: Sequence[int], vouch_idx: Sequence[int], trust, is_seed,
               tol: float = 1e-9, max_iter: int = 1000):
    """Array-level fixed point; returns ``(ism, iterations, residual, converged)``."""
    for t in np.asarray(trust, dtype=float):
        if not 0.0 <= t <= 1.0:
            raise DomainError("trust values must lie in [0, 1]")
    return _kernels.ism_fixed_point(
        np.asarray(vouch_ptr, dtype=np.int64), np.asarray(vouch_idx, dtype=np.int64),
        np.asarray(trust, dtype=np.float64), np.asarray(is_seed, dtype=np.uint8),
        float(tol), int(max_iter))


def path_spoof_probability(path: Sequence, ism: Mapping | IsmResult, observer=None) -> float:
    """Probability that no intermediate node of ``path`` spoofs its identity.

    Product of the observer's ISM over the intermediate nodes; a direct
    link (no intermediates) gives 1.
    """
    if len(path) == 0:
        raise DomainError("path must be nonempty")
    values = ism.values if isinstance(ism, IsmResult) else ism
    prob = 1.0
    for v in path[1:-1]:
        if v == observer:
            continue
        try:
            prob *= values[v]
        except KeyError:
            raise KeyError(f"no ISM value for node {v!r}") from None
    return prob


def neighbor_vouchers(adjacency: Mapping[Hashable, Iterable]) -> dict:
    """Default voucher sets: every node is vouched for by its neighbors."""
    return {j: {r for r in nbrs if r != j} for j, nbrs in adjacency.items()}
