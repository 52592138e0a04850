import math

import numpy as np
import pytest
from scipy import stats

from trustflow.errors import ConfigError, DomainError, UndefinedTrustError
from trustflow.trust import (BootstrapParams, CombinedTrustState, EvidenceRecord,
                             InteractionLedger, adjust_for_channel_loss, beta_uncertainty,
                             bootstrap_init, bootstrap_update, eta_schedule, feature_similarity,
                             incremental_trust_update, ips_trust, map_combined_trust,
                             opinion_from_evidence, prior_from_social, record_observation,
                             social_refresh, social_trust, trust_mse, wallpost_trust)


def beta_var(a, b):
    return stats.beta(a, b).var()


class TestUncertainty:
    def test_uniform_prior_is_fully_uncertain(self):
        assert beta_uncertainty(1, 1) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("a,b", [(10, 1), (3, 7), (2.5, 2.5), (40, 13)])
    def test_matches_scaled_beta_variance(self, a, b):
        assert beta_uncertainty(a, b) == pytest.approx(12 * beta_var(a, b), rel=1e-12)

    def test_vanishes_with_evidence(self):
        vals = [beta_uncertainty(3 * k, k) for k in (1, 10, 100, 10000)]
        assert all(x > y for x, y in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    def test_below_floor_rejected(self):
        with pytest.raises(DomainError):
            beta_uncertainty(0.5, 2)


class TestOpinion:
    def test_prior_opinion(self):
        op = opinion_from_evidence(EvidenceRecord())
        assert (op.belief, op.disbelief, op.uncertainty) == pytest.approx((0, 0, 1))

    def test_ten_to_one(self):
        op = opinion_from_evidence(EvidenceRecord(9, 0))
        u = 12 * beta_var(10, 1)
        assert op.uncertainty == pytest.approx(u, rel=1e-12)
        assert op.belief == pytest.approx(10 / 11 * (1 - u), rel=1e-12)
        assert op.belief + op.disbelief + op.uncertainty == pytest.approx(1.0, abs=1e-12)

    def test_long_run_belief_approaches_rate(self):
        rng = np.random.default_rng(3)
        ev = EvidenceRecord()
        for good in rng.random(20000) < 0.7:
            ev = record_observation(ev, bool(good))
        assert opinion_from_evidence(ev).belief == pytest.approx(0.7, abs=0.01)


class TestChannelLoss:
    def test_zero_loss_is_identity(self):
        adj = adjust_for_channel_loss(10, 10, 0.0)
        assert (adj.alpha, adj.beta, adj.clamped) == (10, 10, False)

    def test_shift(self):
        adj = adjust_for_channel_loss(10, 10, 0.1)
        assert (adj.alpha, adj.beta) == pytest.approx((12, 8))
        assert not adj.clamped

    def test_clamp(self):
        adj = adjust_for_channel_loss(2, 1, 0.5)
        assert (adj.alpha, adj.beta) == pytest.approx((3.5, 1))
        assert adj.clamped


class TestRecordObservation:
    def test_positive(self):
        ev = record_observation(EvidenceRecord(), True)
        assert (ev.alpha, ev.beta) == (2, 1)

    def test_negative(self):
        ev = record_observation(EvidenceRecord(), False)
        assert (ev.alpha, ev.beta) == (1, 2)

    def test_negative_counts_rejected(self):
        with pytest.raises(DomainError):
            EvidenceRecord(-1, 0)


def _profile(act, inter, gender, aff):
    return {"activities": act, "interests": inter, "gender": gender, "affiliations": aff}


class TestIps:
    a = _profile("hiking chess", "jazz", "f", "tulane")
    b = _profile("swimming", "opera", "m", "lsu")

    @staticmethod
    def oracle(k):
        # uncertainty-discounted Beta mean of Beta(k + 1, 4 - k + 1)
        dist = stats.beta(k + 1, 5 - k)
        return dist.mean() * (1 - 12 * dist.var())

    def test_identical(self):
        ev, value = ips_trust(self.a, self.a)
        assert (ev.alpha_s, ev.beta_s) == (4, 0)
        assert value == pytest.approx(self.oracle(4), rel=1e-12)
        assert value == pytest.approx(0.634921, abs=1e-6)

    def test_disjoint(self):
        ev, value = ips_trust(self.a, self.b)
        assert (ev.alpha_s, ev.beta_s) == (0, 4)
        assert value == pytest.approx(0.126984, abs=1e-6)

    def test_three_of_four(self):
        c = dict(self.a, gender="m")
        ev, value = ips_trust(self.a, c)
        assert (ev.alpha_s, ev.beta_s) == (3, 1)
        assert value == pytest.approx(self.oracle(3), rel=1e-12)
        assert value == pytest.approx(0.412698, abs=1e-6)

    def test_missing_feature_scores_zero(self):
        c = dict(self.a)
        del c["interests"]
        ev, _ = ips_trust(self.a, c)
        assert "interests" in ev.missing
        assert dict(ev.per_feature_scores)["interests"] == 0.0

    def test_symmetric(self):
        c = _profile("hiking golf", "jazz blues", "f", "lsu tulane")
        assert ips_trust(self.a, c)[1] == ips_trust(c, self.a)[1]

    def test_jaccard(self):
        assert feature_similarity("interests", "a b c", "b c d") == pytest.approx(0.5)
        assert feature_similarity("gender", "F", "f") == 1.0


class TestWallpost:
    def ledger(self, n_ij, n_i, c, a=1.0):
        events = {("i", "j"): [float(t) for t in range(n_ij)]}
        if n_i > n_ij:
            events[("i", "k")] = [float(t) for t in range(n_i - n_ij)]
        return InteractionLedger(events, {"i": c}, a)

    def test_no_posts(self):
        assert wallpost_trust(self.ledger(0, 10, 5), "i", "j") == 0.0

    def test_average_rate(self):
        # 4 of 20 posts with C = 5 is exactly the average share
        assert wallpost_trust(self.ledger(4, 20, 5), "i", "j") == pytest.approx(1 - math.exp(-1))

    def test_saturates(self):
        assert wallpost_trust(self.ledger(200, 200, 50), "i", "j") == pytest.approx(1.0)

    def test_empty_history(self):
        assert wallpost_trust(InteractionLedger({}, {"i": 3}), "i", "j") == 0.0
        assert wallpost_trust(self.ledger(3, 3, 0), "i", "j") == 0.0

    def test_time_cutoff_inclusive(self):
        led = self.ledger(5, 5, 1)
        assert led.count("i", "j", 2.0) == 3


class TestSocialMix:
    def test_endpoints(self):
        assert social_trust(0.3, 0.9, 0.0) == 0.3
        assert social_trust(0.3, 0.9, 1.0) == 0.9

    def test_mean(self):
        assert social_trust(0.4, 0.8, 0.5) == pytest.approx(0.6)

    def test_domain(self):
        with pytest.raises(DomainError):
            social_trust(1.2, 0.5, 0.5)

    def test_eta(self):
        assert eta_schedule(0, 0) == 0.0
        assert eta_schedule(1e12, 1e6) == 1.0
        ts = np.linspace(0, 200 * 86400, 50)
        vals = [eta_schedule(t, 30) for t in ts]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestMap:
    def test_uniform_prior_is_frequency(self):
        assert map_combined_trust(7, 10, 1, 1) == pytest.approx(0.7)

    def test_prior_mode(self):
        assert map_combined_trust(0, 0, 3, 2) == pytest.approx(2 / 3)

    def test_grid_argmax(self):
        grid = np.linspace(0, 1, 10001)
        logpost = stats.beta(8 + 9, 2 + 3).logpdf(grid)
        assert map_combined_trust(8, 10, 9, 3) == pytest.approx(grid[np.argmax(logpost)], abs=1e-4)
        assert map_combined_trust(8, 10, 9, 3) == pytest.approx(0.8)

    def test_undefined(self):
        with pytest.raises(UndefinedTrustError):
            map_combined_trust(0, 0, 1, 1)

    def test_bad_counts(self):
        with pytest.raises(DomainError):
            map_combined_trust(5, 3, 1, 1)

    def test_prior_from_social(self):
        a, b = prior_from_social(0.6, 10)
        assert (a, b) == pytest.approx((7, 5))
        assert CombinedTrustState.from_social(0.6).prior_mode == pytest.approx(0.6)

    def test_state_observe(self):
        st = CombinedTrustState.from_social(0.8, 10)
        for good in (True, False, True):
            st = st.observe(good)
        assert st.value == pytest.approx((2 + 8) / (3 + 10))


class TestIncremental:
    def test_positive(self):
        # prior (2, 2), r = 2 of 4 gives T = 0.5; one more success
        assert incremental_trust_update(0.5, 4, 2, True) == pytest.approx(
            map_combined_trust(3, 5, 2, 2))
        assert incremental_trust_update(0.5, 4, 2, True) == pytest.approx(4 / 7)

    def test_negative(self):
        assert incremental_trust_update(0.5, 4, 2, False) == pytest.approx(
            map_combined_trust(2, 5, 2, 2))

    def test_first_observation_without_prior(self):
        assert incremental_trust_update(0.37, 0, 0, True) == 1.0
        assert incremental_trust_update(0.37, 0, 0, False) == 0.0


class TestMse:
    def test_prior_only(self):
        assert trust_mse(0, 5, 0.8, 0.5) == pytest.approx(0.09)

    def test_no_prior(self):
        assert trust_mse(10, 0, 0.3, 0.9) == pytest.approx(0.021)

    def test_point(self):
        assert trust_mse(20, 4, 0.8, 0.5) == pytest.approx(4.64 / 576)

    def test_monte_carlo_point(self):
        rng = np.random.default_rng(11)
        r = rng.binomial(20, 0.8, size=400000)
        est = (r + 0.5 * 4) / 24
        assert np.mean((est - 0.8) ** 2) == pytest.approx(trust_mse(20, 4, 0.8, 0.5), abs=1e-3)

    def test_domain(self):
        with pytest.raises(DomainError):
            trust_mse(0, 0, 0.5, 0.5)


class TestBootstrap:
    p = BootstrapParams(0.7, 0.1, 0.5)

    @pytest.mark.parametrize("s", [0.0, 0.6, 1.0])
    def test_init(self, s):
        assert bootstrap_init(s) == s

    def test_good_evidence(self):
        assert bootstrap_update(0.5, 0.9, self.p) == pytest.approx(0.62)

    def test_penalty(self):
        assert bootstrap_update(0.5, 0.3, self.p) == pytest.approx(0.39)

    def test_no_penalty_at_half(self):
        assert bootstrap_update(0.5, 0.5, self.p) == pytest.approx(0.5)

    def test_fixed_point(self):
        assert bootstrap_update(0.8, 0.8, self.p) == pytest.approx(0.8)

    def test_contraction_limits(self):
        t = 0.9
        for _ in range(500):
            t = bootstrap_update(t, 0.3, self.p)
        assert t == pytest.approx(0.3 * 0.3 / (0.3 + 0.1), abs=1e-12)
        t = 0.1
        for _ in range(500):
            t = bootstrap_update(t, 0.75, self.p)
        assert t == pytest.approx(0.75, abs=1e-12)

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            BootstrapParams(0.1, 0.2, 0.5)

    def test_refresh(self):
        assert social_refresh(0.8, 0.6, 1.0) == 0.8
        assert social_refresh(0.8, 0.6, 0.0) == 0.6
        assert social_refresh(0.8, 0.6, 0.5) == pytest.approx(0.7)
