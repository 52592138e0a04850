"""Topology, multipath discovery, path trust and admissibility.

Path discovery stands in for a multipath on-demand routing protocol: it
extracts hop-count shortest paths one at a time and removes the links of
each extracted path, giving link-disjoint paths. Ties go to the
lexicographically smallest node sequence so results are reproducible.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import DomainError, FormatError
from .identity import VoucherGraph, path_spoof_probability

Node = Hashable
Link = tuple


@dataclass(frozen=True)
class Topology:
    """Nodes with planar positions (meters) and directed capacitated links."""

    positions: Mapping[Node, tuple]
    links: Mapping[Link, float]
    radio_range: float = 400.0
    _adj: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for (i, j), c in self.links.items():
            if i not in self.positions or j not in self.positions:
                raise DomainError(f"link ({i!r}, {j!r}) references an unknown node")
            if not (c >= 0 and math.isfinite(c)):
                raise DomainError(f"capacity of ({i!r}, {j!r}) must be finite and >= 0")
        adj = {v: [] for v in self.positions}
        for i, j in self.links:
            adj[i].append(j)
        for v in adj:
            adj[v].sort()
        object.__setattr__(self, "_adj", adj)

    @property
    def nodes(self) -> list:
        return sorted(self.positions)

    def neighbors(self, v) -> list:
        return self._adj[v]

    def has_link(self, i, j) -> bool:
        return (i, j) in self.links

    def capacity(self, i, j) -> float:
        return self.links[(i, j)]

    def adjacency(self) -> dict:
        return {v: list(ns) for v, ns in self._adj.items()}


def build_topology(positions: Mapping[Node, Sequence[float]], radio_range: float = 400.0,
                   capacity: float | Mapping[Link, float] | Callable = 50.0) -> Topology:
    """Unit-disk topology: ``(i, j)`` is a link iff the nodes are within range.

    ``capacity`` is a constant, a per-link table (looked up for either
    orientation) or a callable ``(i, j) -> capacity``.
    """
    if radio_range <= 0:
        raise DomainError("radio range must be positive")
    ids = sorted(positions)
    if len(set(ids)) != len(list(positions)):
        raise FormatError("duplicate node id")
    pos = {v: (float(positions[v][0]), float(positions[v][1])) for v in ids}
    if ids:
        xy = np.array([pos[v] for v in ids])
        d2 = ((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=-1)
        within = d2 <= radio_range * radio_range
        np.fill_diagonal(within, False)
    links = {}
    for a, b in zip(*np.nonzero(within)) if ids else ():
        i, j = ids[a], ids[b]
        links[(i, j)] = _capacity_for(capacity, i, j)
    return Topology(pos, links, float(radio_range))


def _capacity_for(capacity, i, j) -> float:
    if callable(capacity):
        return float(capacity(i, j))
    if isinstance(capacity, Mapping):
        if (i, j) in capacity:
            return float(capacity[(i, j)])
        return float(capacity[(j, i)])
    return float(capacity)


@dataclass(frozen=True)
class PathSet:
    source: Node
    destination: Node
    paths: tuple = ()

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)


def path_links(path: Sequence[Node]) -> list:
    return [(path[k], path[k + 1]) for k in range(len(path) - 1)]


def _reverse(adj: Mapping[Node, Sequence[Node]]) -> dict:
    radj = {}
    for i, ns in adj.items():
        for j in ns:
            radj.setdefault(j, []).append(i)
    return radj


def _bfs_dist(radj: Mapping[Node, Sequence[Node]], target, removed) -> dict:
    # hop distances to target, walking links backwards
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in radj.get(v, ()):
            if u not in dist and (u, v) not in removed:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def shortest_path(adj: Mapping[Node, Sequence[Node]], s, d, removed=frozenset(), radj=None):
    """Lexicographically smallest minimum-hop path from ``s`` to ``d`` or None."""
    dist = _bfs_dist(_reverse(adj) if radj is None else radj, d, removed)
    if s not in dist:
        return None
    path = [s]
    v = s
    while v != d:
        want = dist[v] - 1
        v = min(u for u in adj[v] if (v, u) not in removed and dist.get(u) == want)
        path.append(v)
    return tuple(path)


def discover_paths(topology: Topology, s, d, k: int = 3) -> PathSet:
    """Up to ``k`` link-disjoint minimum-hop paths, shortest first.

    Both orientations of every used link are removed before the next
    extraction. An unreachable destination yields an empty set.
    """
    if s == d:
        raise DomainError("source and destination must differ")
    if k < 1:
        raise DomainError("k must be >= 1")
    adj = topology.adjacency()
    radj = _reverse(adj)
    removed = set()
    found = []
    for _ in range(k):
        p = shortest_path(adj, s, d, removed, radj)
        if p is None:
            break
        found.append(p)
        for i, j in path_links(p):
            removed.add((i, j))
            removed.add((j, i))
    return PathSet(s, d, tuple(found))


def path_trust(path: Sequence[Node], trust_map: Mapping[Link, float]) -> float:
    """Product of the link trust values along ``path``."""
    t = 1.0
    for link in path_links(path):
        try:
            t *= trust_map[link]
        except KeyError:
            raise KeyError(f"no trust value for link {link!r}") from None
    return t


@dataclass(frozen=True)
class RoutingMatrix:
    """Binary link-by-path incidence matrix."""

    links: tuple
    entries: np.ndarray

    def column(self, p: int) -> np.ndarray:
        return self.entries[:, p]


def routing_matrix(path_set: PathSet | Sequence[Sequence[Node]], topology: Topology | None = None,
                   links: Sequence[Link] | None = None) -> RoutingMatrix:
    """Rows follow ``links`` (default: the topology's links in sorted order)."""
    paths = list(path_set)
    if links is None:
        if topology is None:
            links = sorted({lk for p in paths for lk in path_links(p)})
        else:
            links = sorted(topology.links)
    row = {lk: r for r, lk in enumerate(links)}
    w = np.zeros((len(links), len(paths)), dtype=np.int8)
    for c, p in enumerate(paths):
        for lk in path_links(p):
            if topology is not None and not topology.has_link(*lk):
                raise DomainError(f"path uses missing link {lk!r}")
            w[row[lk], c] = 1
    return RoutingMatrix(tuple(links), w)


def admissible_paths(path_set: PathSet, trust_map: Mapping[Link, float], ism_map=None,
                     tau_t: float = 0.0, tau_s: float = 0.0, observer=None) -> PathSet:
    """Keep the paths meeting both the trust and the identity thresholds.

    With ``ism_map=None`` every identity is taken as verified.
    """
    for name, tau in (("tau_T", tau_t), ("tau_S", tau_s)):
        if not 0.0 <= tau <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1]")
    observer = path_set.source if observer is None else observer
    kept = []
    for p in path_set:
        if path_trust(p, trust_map) < tau_t:
            continue
        if ism_map is not None and path_spoof_probability(p, ism_map, observer) < tau_s:
            continue
        kept.append(p)
    return PathSet(path_set.source, path_set.destination, tuple(kept))


# --------------------------------------------------------------------------
# Topology file
# --------------------------------------------------------------------------

@dataclass
class TopologySpec:
    """Parsed topology file."""

    topology: Topology
    sources: list
    vouchers: dict
    seeds: dict
    trust: dict

    def voucher_graph(self, default_trust: float = 0.0) -> VoucherGraph:
        return VoucherGraph(self.vouchers, self.seeds, self.trust, default_trust)


def parse_topology(stream: TextIO | Iterable[str], default_capacity: float = 50.0,
                   default_range: float = 400.0) -> TopologySpec:
    """Read the line-oriented topology format.

    Records: ``node <id> <x> <y>``, ``link <a> <b> <capacity>`` (adds both
    directions), ``range <m>``, ``source <id> <dest>``,
    ``voucher <subject> <v1> [<v2> ...]``, ``seed <observer> <id>``,
    ``trust <i> <j> <value>``. ``#`` starts a comment. Without ``link``
    records, links are derived from positions and range.
    """
    positions = {}
    links = {}
    rng = default_range
    sources = []
    vouchers = {}
    seeds = {}
    trust = {}
    for lineno, raw in enumerate(stream, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind, args = tok[0], tok[1:]
        try:
            if kind == "node":
                _arity(args, 3, lineno)
                if args[0] in positions:
                    raise FormatError(f"duplicate node id {args[0]!r}", lineno)
                positions[args[0]] = (float(args[1]), float(args[2]))
            elif kind == "link":
                _arity(args, 3, lineno)
                cap = float(args[2])
                if not (cap >= 0 and math.isfinite(cap)):
                    raise FormatError("capacity must be finite and >= 0", lineno)
                links[(args[0], args[1])] = cap
                links[(args[1], args[0])] = cap
            elif kind == "range":
                _arity(args, 1, lineno)
                rng = float(args[0])
            elif kind == "source":
                _arity(args, 2, lineno)
                sources.append((args[0], args[1]))
            elif kind == "voucher":
                if len(args) < 2:
                    raise FormatError("voucher needs a subject and at least one voucher", lineno)
                if args[0] in args[1:]:
                    raise FormatError(f"node {args[0]!r} vouches for itself", lineno)
                vouchers.setdefault(args[0], set()).update(args[1:])
            elif kind == "seed":
                _arity(args, 2, lineno)
                seeds.setdefault(args[0], set()).add(args[1])
            elif kind == "trust":
                _arity(args, 3, lineno)
                value = float(args[2])
                if not 0.0 <= value <= 1.0:
                    raise FormatError("trust value must lie in [0, 1]", lineno)
                trust[(args[0], args[1])] = value
            else:
                raise FormatError(f"unknown record {kind!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(str(exc), lineno) from None
    missing = sorted({v for lk in links for v in lk if v not in positions})
    if missing:
        raise FormatError(f"links reference undeclared nodes: {missing}")
    if links:
        topo = Topology(positions, links, rng)
    else:
        topo = build_topology(positions, rng, default_capacity)
    for s, d in sources:
        for v in (s, d):
            if v not in positions:
                raise FormatError(f"source record references unknown node {v!r}")
    return TopologySpec(topo, sources, vouchers, seeds, trust)


def _arity(args, n, lineno):
    if len(args) != n:
        raise FormatError(f"expected {n} fields, got {len(args)}", lineno)


def format_topology(spec: TopologySpec) -> str:
    """Serialize a :class:`TopologySpec` back to the file format."""
    topo = spec.topology
    out = [f"range {topo.radio_range:g}"]
    for v in topo.nodes:
        x, y = topo.positions[v]
        out.append(f"node {v} {x:.17g} {y:.17g}")
    seen = set()
    for (i, j), c in sorted(topo.links.items()):
        if (j, i) in seen:
            continue
        seen.add((i, j))
        out.append(f"link {i} {j} {c:.17g}")
    for s, d in spec.sources:
        out.append(f"source {s} {d}")
    for j in sorted(spec.vouchers):
        out.append("voucher " + " ".join([str(j)] + sorted(map(str, spec.vouchers[j]))))
    for i in sorted(spec.seeds):
        for s in sorted(spec.seeds[i]):
            out.append(f"seed {i} {s}")
    for (i, j), v in sorted(spec.trust.items()):
        out.append(f"trust {i} {j} {v:.17g}")
    return "\n".join(out) + "\n"
