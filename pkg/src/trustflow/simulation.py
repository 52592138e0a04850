"""Round-based simulation of trust-filtered multipath routing.

One round is one second. Each round the nodes move, links are rebuilt from
positions, every source rediscovers up to ``k_paths`` link-disjoint paths,
keeps the admissible ones, shares ``packets_per_round`` packets across them
in proportion to the allocated rates, and the packets are forwarded hop by
hop. Malicious nodes drop with ``drop_probability``, valid ones with
``plr``. The upstream node of each hop sees the outcome with
``observe_probability``. A source therefore gathers direct evidence only
on its first hops and falls back on its social prior elsewhere, unless
``relay_evidence`` forwards upstream observations back to it. Trust
updates apply at the end of the round, so allocation always sees a fixed
trust snapshot.

Randomness is drawn from per-purpose, per-round substreams of the run
seed, so a given round sees the same draws whatever happened earlier.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .allocation import AllocationProblem, SourceFlows, solve_distributed
from .config import ScenarioConfig
from .errors import ConfigError
from .identity import ism_arrays
from .network import Topology, discover_paths, path_links
from .trust import BootstrapParams, EvidenceRecord, behavioral_trust, bootstrap_update

# substream tags
_SETUP, _SOCIAL, _MOBILITY, _PACKETS = 1, 2, 3, 4


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


# --------------------------------------------------------------------------
# Mobility
# --------------------------------------------------------------------------

@dataclass
class MobilityState:
    positions: np.ndarray
    waypoints: np.ndarray
    speeds: np.ndarray

    def copy(self) -> "MobilityState":
        return MobilityState(self.positions.copy(), self.waypoints.copy(), self.speeds.copy())


def init_mobility(cfg: ScenarioConfig, rng: np.random.Generator) -> MobilityState:
    n = cfg.node_count
    area = np.array([cfg.width, cfg.height])
    pos = rng.random((n, 2)) * area
    way = rng.random((n, 2)) * area
    speed = rng.uniform(cfg.speed_min, cfg.speed_max, size=n)
    return MobilityState(pos, way, speed)


def step_mobility(state: MobilityState, cfg: ScenarioConfig, dt: float,
                  rng: np.random.Generator) -> MobilityState:
    """Random-waypoint step of length ``dt`` seconds.

    A node moves straight toward its waypoint at its speed. A node that
    reaches the waypoint within ``dt`` stops there and draws a new uniform
    waypoint and a new speed in ``[speed_min, speed_max]``. Static mobility
    returns an unchanged copy.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if not cfg.mobile:
        return state.copy()
    n = len(state.speeds)
    area = np.array([cfg.width, cfg.height])
    new_way = rng.random((n, 2)) * area
    new_speed = rng.uniform(cfg.speed_min, cfg.speed_max, size=n)
    delta = state.waypoints - state.positions
    dist = np.hypot(delta[:, 0], delta[:, 1])
    travel = state.speeds * dt
    arrive = travel >= dist
    frac = np.where(arrive, 1.0, travel / np.where(dist > 0, dist, 1.0))
    pos = state.positions + delta * frac[:, None]
    way = np.where(arrive[:, None], new_way, state.waypoints)
    speed = np.where(arrive, new_speed, state.speeds)
    return MobilityState(pos, way, speed)


def topology_from_positions(positions: np.ndarray, radio_range: float,
                            capacity: float) -> Topology:
    n = len(positions)
    d2 = ((positions[:, None, :] - positions[None, :, :]) ** 2).sum(axis=-1)
    within = d2 <= radio_range * radio_range
    np.fill_diagonal(within, False)
    links = {(int(i), int(j)): float(capacity) for i, j in zip(*np.nonzero(within))}
    return Topology({v: (float(positions[v, 0]), float(positions[v, 1])) for v in range(n)},
                    links, float(radio_range))


# --------------------------------------------------------------------------
# Forwarding and observation
# --------------------------------------------------------------------------

def forwarding_outcome(malicious: bool, cfg: ScenarioConfig, rng: np.random.Generator,
                       size=None):
    """True where the node forwards: malicious nodes drop with
    ``drop_probability``, valid nodes with ``plr``."""
    p_drop = cfg.drop_probability if malicious else cfg.plr
    return rng.random(size) >= p_drop


@dataclass(frozen=True)
class HopEvents:
    """Forwarding decisions in time order.

    Entry ``k``: at ``time[k]`` node ``observer[k]`` handed a packet to
    ``subject[k]``, which then forwarded it (``forwarded[k]``) or dropped
    it.
    """

    time: np.ndarray
    observer: np.ndarray
    subject: np.ndarray
    forwarded: np.ndarray

    @classmethod
    def from_tuples(cls, rows) -> "HopEvents":
        rows = list(rows)
        cols = list(zip(*rows)) if rows else ([], [], [], [])
        return cls(np.asarray(cols[0], dtype=float), np.asarray(cols[1], dtype=np.int64),
                   np.asarray(cols[2], dtype=np.int64), np.asarray(cols[3], dtype=bool))

    def __len__(self):
        return len(self.time)


def observe_and_update(events: HopEvents, store: "TrustStore", rng: np.random.Generator | None,
                       observe_probability: float, source: int | None = None,
                       relay: bool = False) -> int:
    """Record the observed subset of ``events`` in ``store``.

    Each event is seen by its observer with ``observe_probability``; ``rng``
    may be None when that probability is 0 or 1. With ``relay`` a seen
    event is also credited to ``source``. Returns the number seen.
    """
    n = len(events)
    if n == 0 or observe_probability <= 0.0:
        return 0
    if observe_probability >= 1.0:
        seen = np.ones(n, dtype=bool)
    else:
        seen = rng.random(n) < observe_probability
    obs = events.observer[seen]
    sub = events.subject[seen]
    fwd = events.forwarded[seen]
    store.record_many(obs, sub, fwd)
    if relay and source is not None:
        other = obs != source
        store.record_many(np.full(int(other.sum()), source), sub[other], fwd[other])
    return int(seen.sum())


# --------------------------------------------------------------------------
# Trust store
# --------------------------------------------------------------------------

class TrustStore:
    """Trust of every node in every other node.

    ``map-prior`` keeps positive/total counts with a Beta prior whose mode
    is the social trust (uniform prior in behavioral-only mode; there a
    subject never observed gets ``unobserved_trust``). ``bootstrap`` keeps
    the recursive trust value and its raw evidence counts. Mode ``none``
    trusts everyone fully and ignores evidence.
    """

    def __init__(self, cfg: ScenarioConfig, social: np.ndarray):
        n = cfg.node_count
        self.cfg = cfg
        self.mode = cfg.trust_mode
        self.social = social
        self.n = np.zeros((n, n), dtype=np.int64)
        self.pos = np.zeros((n, n), dtype=np.int64)
        if self.mode == "social+behavioral":
            self.alpha = 1.0 + social * cfg.prior_strength
            self.beta = 1.0 + (1.0 - social) * cfg.prior_strength
        else:
            self.alpha = np.ones((n, n))
            self.beta = np.ones((n, n))
        self.boot = self.mode == "social+behavioral" and cfg.combination == "bootstrap"
        self.params = BootstrapParams(cfg.epsilon, cfg.zeta, cfg.rho)
        self.value = social.copy() if self.boot else None

    def record_many(self, observers, subjects, forwarded):
        """Record events in order (order matters for the bootstrap rule)."""
        if self.mode == "none" or len(observers) == 0:
            return
        if not self.boot:
            np.add.at(self.n, (observers, subjects), 1)
            np.add.at(self.pos, (observers, subjects), np.asarray(forwarded, dtype=np.int64))
            return
        for o, j, f in zip(observers.tolist(), subjects.tolist(), np.asarray(forwarded).tolist()):
            self.record(o, j, f)

    def record(self, observer: int, subject: int, forwarded: bool):
        if self.mode == "none":
            return
        self.n[observer, subject] += 1
        self.pos[observer, subject] += int(forwarded)
        if self.boot:
            raw_a = int(self.pos[observer, subject])
            raw_b = int(self.n[observer, subject]) - raw_a
            b_hat = behavioral_trust(EvidenceRecord(raw_a, raw_b, self.cfg.plr))
            self.value[observer, subject] = bootstrap_update(
                self.value[observer, subject], b_hat, self.params)

    def refresh(self):
        if self.boot:
            rho = self.params.rho
            self.value = rho * self.value + (1.0 - rho) * self.social

    def row(self, observer: int) -> np.ndarray:
        """Current trust of ``observer`` in every node (self-trust 1)."""
        return self._values(slice(observer, observer + 1))[0]

    def matrix(self) -> np.ndarray:
        return self._values(slice(None))

    def _values(self, rows: slice) -> np.ndarray:
        shape = self.n[rows].shape
        if self.mode == "none":
            out = np.ones(shape)
        elif self.boot:
            out = self.value[rows].copy()
        else:
            a, b = self.alpha[rows], self.beta[rows]
            num = self.pos[rows] + a - 1.0
            den = self.n[rows] + a + b - 2.0
            safe = np.where(den > 0, den, 1.0)
            out = np.where(den > 0, num / safe, self.cfg.unobserved_trust)
        idx = np.arange(self.n.shape[0])[rows]
        out[np.arange(len(idx)), idx] = 1.0
        return np.clip(out, 0.0, 1.0)


# --------------------------------------------------------------------------
# Scenario setup
# --------------------------------------------------------------------------

@dataclass
class Scenario:
    malicious: frozenset
    spoofers: frozenset
    pairs: tuple
    social: np.ndarray
    vouch_ptr: np.ndarray
    vouch_idx: np.ndarray
    seeds: np.ndarray
    mobility: MobilityState


def _reachable(adj: np.ndarray, s: int, d: int) -> bool:
    seen = {s}
    frontier = [s]
    while frontier:
        nxt = []
        for v in frontier:
            for u in np.nonzero(adj[v])[0]:
                u = int(u)
                if u == d:
                    return True
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return False


def _choose_pairs(cfg: ScenarioConfig, adj: np.ndarray, rng: np.random.Generator) -> tuple:
    if cfg.pairs:
        return tuple((int(a), int(b)) for a, b in cfg.pairs)
    n = cfg.node_count
    pairs, used = [], set()
    for _ in range(2000):
        if len(pairs) == cfg.source_pairs:
            break
        s, d = (int(x) for x in rng.choice(n, size=2, replace=False))
        if s in used or d in used or adj[s, d] or not _reachable(adj, s, d):
            continue
        pairs.append((s, d))
        used.update((s, d))
    # sparse placements: relax the reachability requirement
    while len(pairs) < cfg.source_pairs:
        s, d = (int(x) for x in rng.choice(n, size=2, replace=False))
        if s not in used and d not in used:
            pairs.append((s, d))
            used.update((s, d))
    return tuple(pairs)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """Roles, source pairs, social trust, vouchers and initial mobility.

    Source pairs are drawn first, then malicious nodes are the first
    ``malicious_count`` non-endpoint nodes of a seeded permutation, so
    smaller adversary sets are subsets of larger ones for a fixed seed.
    The first ``spoof_count`` malicious nodes are spoofers: they present a
    fabricated identity that looks like a valid social contact. No valid
    node certifies a fabricated identity, and neither can another
    fabricated one, so its only vouchers are the malicious nodes acting
    under their real identities.
    """
    n = cfg.node_count
    setup = _rng(cfg.rng_seed, _SETUP)
    mob = init_mobility(cfg, setup)
    d2 = ((mob.positions[:, None] - mob.positions[None]) ** 2).sum(axis=-1)
    adj = d2 <= cfg.radio_range ** 2
    np.fill_diagonal(adj, False)
    pairs = _choose_pairs(cfg, adj, setup)
    endpoints = {v for p in pairs for v in p}
    order = [int(v) for v in setup.permutation(n) if int(v) not in endpoints]
    if cfg.malicious_count > len(order):
        raise ConfigError("not enough non-endpoint nodes for the malicious count")
    bad = order[:cfg.malicious_count]
    malicious = frozenset(bad)
    spoofers = frozenset(bad[:cfg.spoof_count])

    srng = _rng(cfg.rng_seed, _SOCIAL)
    social = srng.uniform(cfg.social_valid_min, cfg.social_valid_max, size=(n, n))
    for m in malicious - spoofers:
        social[:, m] = cfg.social_malicious
    np.fill_diagonal(social, 1.0)

    ptr, idx = [0], []
    for j in range(n):
        if j in spoofers:
            vs = sorted(malicious - spoofers)
        else:
            vs = [int(v) for v in np.nonzero(adj[j])[0]]
        idx.extend(vs)
        ptr.append(len(idx))
    seeds = social >= cfg.seed_threshold
    seeds[:, sorted(spoofers)] = False
    np.fill_diagonal(seeds, True)
    return Scenario(malicious, spoofers, pairs, social, np.asarray(ptr, dtype=np.int64),
                    np.asarray(idx, dtype=np.int64), seeds, mob)


# --------------------------------------------------------------------------
# Run
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundMetrics:
    round: int
    packets_sent: int
    packets_delivered: int
    delivery_ratio: float
    throughput: float
    avoid_probability: float
    detected_malicious: int
    spoof_exposure: float
    admissible_paths: int


METRIC_FIELDS = tuple(f.name for f in fields(RoundMetrics))


@dataclass(frozen=True)
class RouteRecord:
    round: int
    source: int
    path: tuple
    path_trust: float
    spoof_probability: float
    packets: int


@dataclass
class SimulationResult:
    config: ScenarioConfig
    metrics: list
    trust: np.ndarray
    evidence: np.ndarray
    pairs: tuple
    malicious: frozenset
    spoofers: frozenset
    routes: list = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.metrics], dtype=float)

    def final_quintile(self, name: str = "delivery_ratio") -> float:
        s = self.series(name)
        k = max(1, len(s) // 5)
        return float(s[-k:].mean())

    def mean(self, name: str = "delivery_ratio") -> float:
        return float(self.series(name).mean())


def _apportion(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder split of ``total`` packets by ``weights``."""
    w = np.asarray(weights, dtype=float)
    if total <= 0 or w.sum() <= 0:
        return np.zeros(len(w), dtype=np.int64)
    share = total * w / w.sum()
    base = np.floor(share).astype(np.int64)
    rest = total - int(base.sum())
    order = np.lexsort((np.arange(len(w)), -(share - base)))
    base[order[:rest]] += 1
    return base


def _ism_row(scn: Scenario, trust_row: np.ndarray, source: int) -> np.ndarray:
    values, _, _, _ = ism_arrays(scn.vouch_ptr, scn.vouch_idx, trust_row,
                                 scn.seeds[source].astype(np.uint8), 1e-9, 1000)
    return np.asarray(values)


def _send(path, count, scn, cfg, rng, pos0, pos1):
    """Forward ``count`` packets along ``path`` during one round.

    Packet send times are uniform in the round. Positions move linearly
    from ``pos0`` to ``pos1``; a packet reaching a link that is out of range
    at its send time is lost without any node being blamed. Returns the
    delivered count and the hop events in time order.
    """
    times = np.sort(rng.random(count))
    hops = len(path) - 1
    n_mid = hops - 1
    nodes = np.asarray(path)
    d0 = pos0[nodes[:-1]] - pos0[nodes[1:]]
    d1 = pos1[nodes[:-1]] - pos1[nodes[1:]]
    dd = d0[None] + times[:, None, None] * (d1 - d0)[None]
    alive = (dd ** 2).sum(axis=2) <= cfg.radio_range ** 2
    p_drop = np.array([cfg.drop_probability if v in scn.malicious else cfg.plr
                       for v in path[1:-1]])
    forward = rng.random((count, n_mid)) >= p_drop[None, :]
    # reach[:, k]: packet arrives at path[k + 1]
    ok = alive.copy()
    ok[:, 1:] &= forward
    reach = np.logical_and.accumulate(ok, axis=1)
    pk, hk = np.nonzero(reach[:, :n_mid])
    events = HopEvents(times[pk], nodes[hk], nodes[hk + 1], forward[pk, hk])
    return int(reach[:, -1].sum()), events


def run_simulation(cfg: ScenarioConfig, record_routes: bool = False) -> SimulationResult:
    """Simulate ``cfg.rounds`` rounds; fully determined by ``cfg.rng_seed``."""
    cfg.validate()
    scn = build_scenario(cfg)
    store = TrustStore(cfg, scn.social)
    mode_none = cfg.trust_mode == "none"
    tau_t = 0.0 if mode_none else cfg.tau_t
    tau_s = 0.0 if mode_none else cfg.tau_s
    use_ism = cfg.ism_enabled and not mode_none
    valid_observers = np.array([v not in scn.malicious for v in range(cfg.node_count)])
    mal_sorted = sorted(scn.malicious)
    state = scn.mobility
    metrics = []
    routes = []
    for rnd in range(cfg.rounds):
        nxt = step_mobility(state, cfg, 1.0, _rng(cfg.rng_seed, _MOBILITY, rnd))
        topo = topology_from_positions(state.positions, cfg.radio_range, cfg.capacity)
        chosen = []
        for si, (s, d) in enumerate(scn.pairs):
            ps = discover_paths(topo, s, d, cfg.k_paths)
            row = store.row(s)
            ism = _ism_row(scn, row, s) if use_ism else None
            keep, trusts, spoofs = [], [], []
            for p in ps:
                t = float(np.prod(row[list(p[1:])]))
                sp = float(np.prod(ism[list(p[1:-1])])) if ism is not None else 1.0
                if t >= tau_t and sp >= tau_s:
                    keep.append(p)
                    trusts.append(t)
                    spoofs.append(sp)
            chosen.append((s, tuple(keep), tuple(trusts), tuple(spoofs)))
        sources = [SourceFlows(s, keep, tuple(max(t, 1e-12) for t in trusts), cfg.mu)
                   for s, keep, trusts, _ in chosen if keep]
        caps = {lk: topo.links[lk] for src in sources for p in src.paths for lk in path_links(p)}
        rates = {}
        if sources:
            prob = AllocationProblem(tuple(sources), caps, cfg.utility)
            res = solve_distributed(prob, cfg.max_iter, cfg.tol, cfg.t0)
            rates = res.allocation.rates

        sent = delivered = clean = exposed = 0
        round_events = []
        for si, (s, keep, trusts, spoofs) in enumerate(chosen):
            sent += cfg.packets_per_round
            if not keep:
                continue
            w = np.array([rates[(s, p)] for p in keep])
            counts = _apportion(cfg.packets_per_round, w)
            prng = _rng(cfg.rng_seed, _PACKETS, rnd, si)
            for p, t, sp, c in zip(keep, trusts, spoofs, counts):
                c = int(c)
                if record_routes:
                    routes.append(RouteRecord(rnd, s, p, t, sp, c))
                if c == 0:
                    continue
                got, events = _send(p, c, scn, cfg, prng, state.positions, nxt.positions)
                delivered += got
                if not any(v in scn.malicious for v in p[1:-1]):
                    clean += got
                if any(v in scn.spoofers for v in p[1:-1]):
                    exposed += c
                round_events.append((s, events, prng))
        if not mode_none:
            for s, events, prng in round_events:
                observe_and_update(events, store, prng, cfg.observe_probability, s,
                                   cfg.relay_evidence)
        if store.boot and cfg.refresh_period and (rnd + 1) % cfg.refresh_period == 0:
            store.refresh()
        detected = 0
        if mal_sorted and not mode_none:
            tm = store.matrix()[valid_observers][:, mal_sorted]
            detected = int((tm < cfg.tau_t).any(axis=0).sum())
        metrics.append(RoundMetrics(
            rnd, sent, delivered, delivered / sent if sent else 0.0, float(delivered),
            clean / delivered if delivered else 0.0, detected,
            exposed / sent if sent else 0.0, sum(len(c[1]) for c in chosen)))
        state = nxt
    return SimulationResult(cfg, metrics, store.matrix(), store.n.copy(), scn.pairs,
                            scn.malicious, scn.spoofers, routes)


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def metrics_csv(result: SimulationResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_FIELDS)
    for m in result.metrics:
        w.writerow([_fmt(getattr(m, f)) for f in METRIC_FIELDS])
    return buf.getvalue()


def trust_dump_csv(result: SimulationResult) -> str:
    """``observer,subject,value,n`` for every pair with evidence, plus every
    source row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["observer", "subject", "value", "n"])
    sources = {s for s, _ in result.pairs}
    n = result.trust.shape[0]
    for o in range(n):
        for j in range(n):
            if o == j:
                continue
            if o in sources or result.evidence[o, j] > 0:
                w.writerow([o, j, repr(float(result.trust[o, j])), int(result.evidence[o, j])])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

SWEEP_AXES = {"speed": "speed", "malicious": "malicious_count", "malicious_count": "malicious_count",
              "tau-t": "tau_t", "tau_t": "tau_t", "tau_T": "tau_t", "mu": "mu"}
SUMMARY_FIELDS = ("delivery_ratio", "final_delivery_ratio", "throughput", "avoid_probability",
                  "spoof_exposure", "detected_malicious")


def sweep_config(base: ScenarioConfig, axis: str, value: float, seed: int) -> ScenarioConfig:
    key = SWEEP_AXES.get(axis)
    if key is None:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    if key == "speed":
        cfg = base.replace(speed_min=float(value), speed_max=float(value))
    elif key == "malicious_count":
        m = int(value)
        cfg = base.replace(malicious_count=m, spoof_count=min(base.spoof_count, m))
    else:
        cfg = base.replace(**{key: float(value)})
    return cfg.replace(rng_seed=int(seed))


def summarize(result: SimulationResult) -> dict:
    return {
        "delivery_ratio": result.mean("delivery_ratio"),
        "final_delivery_ratio": result.final_quintile("delivery_ratio"),
        "throughput": result.mean("throughput"),
        "avoid_probability": result.mean("avoid_probability"),
        "spoof_exposure": result.mean("spoof_exposure"),
        "detected_malicious": result.mean("detected_malicious"),
    }


def _sweep_job(args):
    cfg = args
    return summarize(run_simulation(cfg))


@dataclass
class SweepRow:
    value: float
    runs: int
    mean: dict
    std: dict


def parameter_sweep(base: ScenarioConfig, axis: str, values, seeds=5, jobs: int = 1) -> list:
    """Run every ``(value, seed)`` and aggregate mean and sample std.

    ``seeds`` is a count (seeds ``base.rng_seed + k``) or an explicit list.
    Rows come back sorted by axis value whatever the job order.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    seed_list = (list(range(base.rng_seed, base.rng_seed + int(seeds)))
                 if isinstance(seeds, int) else [int(s) for s in seeds])
    if not seed_list:
        raise ConfigError("sweep needs at least one seed")
    jobs_list = [(v, s, sweep_config(base, axis, v, s)) for v in sorted(set(values))
                 for s in sorted(seed_list)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1)) as ex:
            out = list(ex.map(_sweep_job, [j[2] for j in jobs_list]))
    else:
        out = [_sweep_job(j[2]) for j in jobs_list]
    rows = []
    for v in sorted(set(values)):
        got = [o for (jv, _, _), o in zip(jobs_list, out) if jv == v]
        mean = {k: float(np.mean([g[k] for g in got])) for k in SUMMARY_FIELDS}
        std = {k: float(np.std([g[k] for g in got], ddof=1)) if len(got) > 1 else 0.0
               for k in SUMMARY_FIELDS}
        rows.append(SweepRow(v, len(got), mean, std))
    return rows


def sweep_csv(axis: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis, "runs"] + [f"{k}_{s}" for k in SUMMARY_FIELDS for s in ("mean", "std")])
    for r in rows:
        w.writerow([repr(r.value), r.runs]
                   + [repr(x) for k in SUMMARY_FIELDS for x in (r.mean[k], r.std[k])])
    return buf.getvalue()
