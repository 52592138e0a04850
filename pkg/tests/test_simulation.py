from types import SimpleNamespace

import numpy as np
import pytest

from trustflow.config import ScenarioConfig, load_profile
from trustflow.errors import ConfigError
from trustflow.simulation import (METRIC_FIELDS, HopEvents, MobilityState, TrustStore, _send,
                                  build_scenario, forwarding_outcome, metrics_csv,
                                  observe_and_update, parameter_sweep, run_simulation,
                                  step_mobility, sweep_csv, trust_dump_csv)


def small(**kw):
    base = dict(node_count=16, malicious_count=2, width=700.0, height=700.0, rounds=15,
                packets_per_round=20, source_pairs=2, mobility="static", rng_seed=3)
    base.update(kw)
    return ScenarioConfig(**base)


def one_node_state(dist=10.0, speed=5.0):
    return MobilityState(np.array([[0.0, 0.0]]), np.array([[dist, 0.0]]), np.array([speed]))


class TestMobility:
    def test_static_identity(self):
        cfg = small()
        st = one_node_state()
        out = step_mobility(st, cfg, 1.0, np.random.default_rng(0))
        assert np.array_equal(out.positions, st.positions)

    def test_kinematics(self):
        cfg = small(mobility="random-waypoint")
        out = step_mobility(one_node_state(10.0, 5.0), cfg, 1.0, np.random.default_rng(0))
        assert out.positions[0] == pytest.approx([5.0, 0.0])
        assert out.waypoints[0] == pytest.approx([10.0, 0.0])

    def test_arrival_draws_new_waypoint_reproducibly(self):
        cfg = small(mobility="random-waypoint", speed_min=1.0, speed_max=5.0)
        a = step_mobility(one_node_state(3.0, 5.0), cfg, 1.0, np.random.default_rng(11))
        b = step_mobility(one_node_state(3.0, 5.0), cfg, 1.0, np.random.default_rng(11))
        assert a.positions[0] == pytest.approx([3.0, 0.0])
        assert np.array_equal(a.waypoints, b.waypoints) and np.array_equal(a.speeds, b.speeds)
        assert 0 <= a.waypoints[0, 0] <= cfg.width and 1.0 <= a.speeds[0] <= 5.0

    def test_bad_dt(self):
        with pytest.raises(ConfigError):
            step_mobility(one_node_state(), small(), 0.0, np.random.default_rng(0))


class TestForwarding:
    def test_valid_node_no_loss(self):
        assert forwarding_outcome(False, small(plr=0.0), np.random.default_rng(0), 1000).all()

    def test_malicious_always_drops(self):
        cfg = small(drop_probability=1.0)
        assert not forwarding_outcome(True, cfg, np.random.default_rng(0), 1000).any()

    def test_one_malicious_hop_delivers_one_fifth(self):
        cfg = small(drop_probability=0.8, plr=0.0)
        pos = np.array([[0.0, 0.0], [100.0, 0.0], [200.0, 0.0], [300.0, 0.0]])
        scn = SimpleNamespace(malicious={1})
        got, events = _send((0, 1, 2, 3), 10_000, scn, cfg, np.random.default_rng(5), pos, pos)
        assert got / 10_000 == pytest.approx(0.2, abs=0.02)
        # one event per packet at node 1, one per survivor at node 2
        assert (events.subject == 1).sum() == 10_000
        assert (events.subject == 2).sum() == got

    def test_broken_link_loses_without_blame(self):
        cfg = small(plr=0.0)
        pos0 = np.array([[0.0, 0.0], [100.0, 0.0], [200.0, 0.0]])
        pos1 = np.array([[0.0, 0.0], [100.0, 0.0], [5000.0, 0.0]])
        scn = SimpleNamespace(malicious=set())
        got, events = _send((0, 1, 2), 1000, scn, cfg, np.random.default_rng(1), pos0, pos1)
        assert got < 1000
        assert events.forwarded.all()


def store_for(mode, n=3, social_value=0.6, **kw):
    cfg = ScenarioConfig(node_count=n, malicious_count=0, trust_mode=mode, **kw)
    social = np.full((n, n), social_value)
    np.fill_diagonal(social, 1.0)
    return cfg, TrustStore(cfg, social)


def drops(count, forward_rate, rng, observer=0, subject=1):
    fwd = rng.random(count) < forward_rate
    return HopEvents(np.arange(count, dtype=float), np.full(count, observer),
                     np.full(count, subject), fwd)


class TestObservation:
    def test_zero_probability_keeps_prior(self):
        cfg, store = store_for("social+behavioral")
        before = store.matrix()
        seen = observe_and_update(drops(100, 0.2, np.random.default_rng(0)), store, None, 0.0)
        assert seen == 0 and np.array_equal(store.matrix(), before)

    def test_full_observation_counts_once(self):
        cfg, store = store_for("behavioral")
        ev = HopEvents.from_tuples([(0.1, 0, 1, False), (0.2, 0, 1, True), (0.3, 2, 1, False)])
        assert observe_and_update(ev, store, None, 1.0) == 3
        assert store.n[0, 1] == 2 and store.pos[0, 1] == 1 and store.n[2, 1] == 1

    def test_negative_evidence_rate(self):
        cfg, store = store_for("behavioral")
        total = 100_000
        ev = drops(total, 0.2, np.random.default_rng(8))
        observe_and_update(ev, store, np.random.default_rng(9), 0.1)
        neg = store.n[0, 1] - store.pos[0, 1]
        assert neg / total == pytest.approx(0.1 * 0.8, abs=0.004)

    def test_relay_credits_source(self):
        cfg, store = store_for("behavioral")
        ev = HopEvents.from_tuples([(0.1, 1, 2, False)])
        observe_and_update(ev, store, None, 1.0, source=0, relay=True)
        assert store.n[0, 2] == 1 and store.n[1, 2] == 1

    def test_none_mode_ignores_evidence(self):
        cfg, store = store_for("none")
        observe_and_update(drops(50, 0.0, np.random.default_rng(0)), store, None, 1.0)
        assert (store.matrix() == 1.0).all()

    def test_map_value_matches_formula(self):
        cfg, store = store_for("social+behavioral", social_value=0.7)
        ev = HopEvents.from_tuples([(0, 0, 1, True)] * 3 + [(0, 0, 1, False)] * 2)
        observe_and_update(ev, store, None, 1.0)
        a, b = 1 + 0.7 * 10, 1 + 0.3 * 10
        assert store.row(0)[1] == pytest.approx((3 + a - 1) / (5 + a + b - 2))
        assert store.row(0)[0] == 1.0


def detection_round(mode, seed, tau=0.65, per_round=10, rounds=60):
    cfg, store = store_for(mode, observe_probability=0.1)
    rng = np.random.default_rng(seed)
    for r in range(rounds):
        if store.row(0)[1] < tau:
            return r
        observe_and_update(drops(per_round, 0.2, rng), store, rng, 0.1)
    return rounds


class TestTrustDynamics:
    def test_monotone_detection(self):
        k = 25
        at_k, at_2k = [], []
        for seed in range(40):
            cfg, store = store_for("social+behavioral", observe_probability=0.1)
            rng = np.random.default_rng(seed)
            for r in range(2 * k):
                observe_and_update(drops(10, 0.2, rng), store, rng, 0.1)
                if r + 1 == k:
                    at_k.append(store.row(0)[1])
            at_2k.append(store.row(0)[1])
        assert np.mean(at_2k) <= np.mean(at_k) + 0.02

    def test_social_prior_detects_sooner(self):
        sb = np.mean([detection_round("social+behavioral", s) for s in range(20)])
        beh = np.mean([detection_round("behavioral", s) for s in range(20)])
        assert sb < beh


class TestScenario:
    def test_nested_malicious_sets(self):
        sets = [build_scenario(small(malicious_count=m)).malicious for m in (0, 2, 4, 6)]
        assert all(a <= b for a, b in zip(sets, sets[1:]))
        assert [len(s) for s in sets] == [0, 2, 4, 6]

    def test_endpoints_never_malicious(self):
        scn = build_scenario(small(malicious_count=6, source_pairs=3))
        assert not scn.malicious & {v for p in scn.pairs for v in p}

    def test_spoofers_subset(self):
        scn = build_scenario(small(malicious_count=4, spoof_count=2))
        assert scn.spoofers <= scn.malicious and len(scn.spoofers) == 2


class TestRun:
    def test_zero_adversary_full_delivery(self):
        res = run_simulation(small(malicious_count=0, plr=0.0, width=300.0, height=300.0))
        assert all(m.delivery_ratio == 1.0 for m in res.metrics)

    def test_conservation_and_ranges(self):
        res = run_simulation(small(mobility="random-waypoint", malicious_count=4))
        for m in res.metrics:
            assert 0 <= m.packets_delivered <= m.packets_sent
            assert 0.0 <= m.avoid_probability <= 1.0
            assert 0.0 <= m.delivery_ratio <= 1.0

    def test_determinism(self):
        cfg = small(mobility="random-waypoint", malicious_count=3)
        a, b = run_simulation(cfg), run_simulation(cfg)
        assert metrics_csv(a) == metrics_csv(b)
        assert np.array_equal(a.trust, b.trust)

    @pytest.mark.parametrize("tau", [0.5, 0.65, 0.8])
    def test_threshold_guarantee(self, tau):
        res = run_simulation(small(malicious_count=4, tau_t=tau, spoof_count=1),
                             record_routes=True)
        used = [r for r in res.routes if r.packets > 0]
        assert all(r.path_trust >= tau and r.spoof_probability >= res.config.tau_s for r in used)

    def test_unit_threshold_blocks_all(self):
        res = run_simulation(small(tau_t=1.0))
        assert res.mean("delivery_ratio") == 0.0

    def test_invalid_config_raises_before_running(self):
        with pytest.raises(ConfigError):
            run_simulation(ScenarioConfig(node_count=4, malicious_count=4))

    def test_outputs(self):
        res = run_simulation(small(rounds=4))
        lines = metrics_csv(res).splitlines()
        assert lines[0] == ",".join(METRIC_FIELDS) and len(lines) == 5
        dump = trust_dump_csv(res).splitlines()
        assert dump[0] == "observer,subject,value,n"

    def test_sweep_rows(self):
        base = small(rounds=3)
        rows = parameter_sweep(base, "malicious", [0, 2, 4], seeds=2)
        assert [r.value for r in rows] == [0.0, 2.0, 4.0] and all(r.runs == 2 for r in rows)
        text = sweep_csv("malicious", rows).splitlines()
        assert len(text) == 4 and text[0].startswith("malicious,runs,delivery_ratio_mean")

    def test_sweep_bad_axis(self):
        with pytest.raises(ConfigError):
            parameter_sweep(small(), "gravity", [1.0])

    def test_desk_profile_loads(self):
        assert load_profile("desk30").rounds >= 1
