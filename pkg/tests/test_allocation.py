import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar

from trustflow.allocation import (AllocationProblem, DualState, SourceFlows, allocation_csv,
                                  dual_value, per_source_best_response, random_instance,
                                  repair_feasibility, solve_centralized_reference,
                                  solve_distributed, subgradient_step, trace_csv,
                                  utility_diversity, utility_throughput)
from trustflow.errors import DomainError

cp = pytest.importorskip("cvxpy")


def cvx_objective(problem):
    """Optimum of the allocation program from a generic conic solver."""
    keys = problem.path_keys()
    r = cp.Variable(len(keys), nonneg=True)
    terms = []
    k = 0
    for s in problem.sources:
        w1, w2 = (1.0, s.mu) if problem.utility == "combined" else (0.0, 1.0)
        for t in s.trusts:
            if w1:
                terms.append(w1 * cp.log(1 + r[k]))
            if w2:
                terms.append(w2 * cp.entr(r[k] / t))
            k += 1
    cons = []
    for lk, c in problem.capacities.items():
        on = [i for i, (_, p) in enumerate(keys) if lk in zip(p, p[1:])]
        if on:
            cons.append(cp.sum(r[on]) <= c)
    prob = cp.Problem(cp.Maximize(cp.sum(cp.hstack(terms))), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def single(cap=5.0, utility="combined", mu=0.0, trust=1.0):
    src = SourceFlows("s", (("s", "d"),), (trust,), mu)
    return AllocationProblem((src,), {("s", "d"): cap}, utility)


class TestUtilities:
    def test_throughput(self):
        assert utility_throughput([0, 0]) == 0
        assert utility_throughput([math.e - 1]) == pytest.approx(1.0)
        assert utility_throughput([1, 3]) == pytest.approx(math.log(8))

    def test_diversity(self):
        assert utility_diversity([0, 0], [1, 0.5]) == 0
        assert utility_diversity([1 / math.e], [1.0]) == pytest.approx(1 / math.e)
        assert utility_diversity([1.0], [1.0]) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            utility_throughput([-1])
        with pytest.raises(DomainError):
            utility_diversity([0.5], [0.0])


class TestBestResponse:
    def test_throughput_closed_form(self):
        assert per_source_best_response([1.0], [0.5])[0] == pytest.approx(1.0)
        assert per_source_best_response([1.0], [1.0])[0] == 0.0
        assert per_source_best_response([1.0], [3.0])[0] == 0.0

    def test_unpriced_path_hits_cap(self):
        assert per_source_best_response([1.0], [0.0], rate_cap=42.0)[0] == 42.0

    def test_diversity_closed_form(self):
        assert per_source_best_response([1.0], [0.0], utility="diversity")[0] == pytest.approx(
            1 / math.e)
        t, q = 0.6, 0.7
        assert per_source_best_response([t], [q], utility="diversity")[0] == pytest.approx(
            t * math.exp(-(1 + q * t)))

    @pytest.mark.parametrize("mu,t,q", [(0.5, 0.8, 0.3), (2.0, 0.4, 0.9), (0.1, 1.0, 0.05)])
    def test_mixed_stationarity(self, mu, t, q):
        r = per_source_best_response([t], [q], mu=mu, rate_cap=1e6)[0]
        assert r > 0

        def f(x):
            return math.log1p(x) - mu * (x / t) * math.log(x / t) - q * x

        h = 1e-6
        assert (f(r + h) - f(r - h)) / (2 * h) == pytest.approx(0.0, abs=1e-6)

    @given(t=st.floats(0.05, 1.0), q=st.floats(0.0, 20.0), mu=st.floats(1e-3, 5.0),
           cap=st.floats(0.1, 50.0))
    def test_no_better_point_than_best_response(self, t, q, mu, cap):
        r = per_source_best_response([t], [q], mu=mu, rate_cap=cap)[0]
        assert 0.0 <= r <= cap

        def f(x):
            div = -(x / t) * math.log(x / t) if x > 0 else 0.0
            return math.log1p(x) + mu * div - q * x

        ref = minimize_scalar(lambda x: -f(x), bounds=(0.0, cap), method="bounded",
                              options={"xatol": 1e-12})
        assert f(r) >= max(-ref.fun, f(0.0), f(cap)) - 1e-9

    def test_negative_price_rejected(self):
        with pytest.raises(DomainError):
            per_source_best_response([1.0], [-0.1])


class TestSubgradient:
    caps = {"l": 4.0}

    def test_balanced_link_unchanged(self):
        d = subgradient_step(DualState({"l": 0.3}), {"l": 4.0}, self.caps)
        assert d.lam["l"] == pytest.approx(0.3) and d.iteration == 2

    def test_overload_raises_price(self):
        d = subgradient_step(DualState({"l": 0.3}, 1, 1.0), {"l": 6.0}, self.caps)
        assert d.lam["l"] == pytest.approx(2.3)

    def test_projection(self):
        d = subgradient_step(DualState({"l": 0.0}), {"l": 1.0}, self.caps)
        assert d.lam["l"] == 0.0

    def test_diminishing_step(self):
        d = subgradient_step(DualState({"l": 0.0}, 4, 2.0), {"l": 6.0}, self.caps)
        assert d.lam["l"] == pytest.approx(1.0)


class TestDistributed:
    def test_single_path_capacity_bound(self):
        res = solve_distributed(single(5.0), rate_cap=100.0)
        assert res.allocation.rate("s", ("s", "d")) == pytest.approx(5.0, abs=1e-4)

    def test_symmetric_share(self):
        a = SourceFlows("a", (("x", "y"),), (1.0,))
        b = SourceFlows("b", (("x", "y"),), (1.0,))
        res = solve_distributed(AllocationProblem((a, b), {("x", "y"): 1.0}), tol=1e-8)
        assert res.allocation.rate("a", ("x", "y")) == pytest.approx(0.5, abs=1e-6)
        assert res.allocation.rate("b", ("x", "y")) == pytest.approx(0.5, abs=1e-6)

    def test_no_paths(self):
        prob = AllocationProblem((SourceFlows("s", (), ()),), {("a", "b"): 1.0})
        res = solve_distributed(prob)
        assert res.allocation.rates == {} and res.dual.lam == {("a", "b"): 0.0}

    def test_flow_conservation(self):
        prob = random_instance(np.random.default_rng(2), mu=0.5)
        res = solve_distributed(prob)
        for s in prob.sources:
            total = sum(res.allocation.rate(s.source, p) for p in s.paths)
            assert res.allocation.source_rate[s.source] == pytest.approx(total)

    def test_bad_args(self):
        with pytest.raises(DomainError):
            solve_distributed(single(), t0=0)
        with pytest.raises(DomainError):
            solve_distributed(single(), max_iter=0)

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("utility,mu", [("combined", 0.0), ("combined", 0.5),
                                            ("diversity", 0.0)])
    def test_agrees_with_conic_solver(self, seed, utility, mu):
        prob = random_instance(np.random.default_rng(seed), utility, mu)
        res = solve_distributed(prob, tol=1e-7)
        ref = cvx_objective(prob)
        got = prob.objective(res.allocation.rates)
        assert abs(got - ref) / max(1.0, abs(ref)) < 1e-2
        assert prob.max_violation(res.allocation.rates) <= 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_weak_duality_along_trace(self, seed):
        prob = random_instance(np.random.default_rng(100 + seed), "combined", 0.5)
        res = solve_distributed(prob)
        feasible = prob.objective(solve_centralized_reference(prob).rates)
        assert (res.trace.dual_value >= feasible - 1e-9).all()
        best = res.trace.best_dual()
        assert (np.diff(best) <= 0).all()

    def test_trace_dual_matches_direct_evaluation(self):
        prob = random_instance(np.random.default_rng(9), "combined", 0.5)
        res = solve_distributed(prob, max_iter=1)
        lam0 = {lk: 1.0 / (1.0 + c) for lk, c in prob.capacities.items()}
        assert res.trace.dual_value[0] == pytest.approx(dual_value(prob, lam0), rel=1e-12)

    def test_csv(self):
        res = solve_distributed(single(3.0))
        lines = allocation_csv(res.allocation).splitlines()
        assert lines[0] == "source,path,rate" and lines[1].startswith("s,s-d,")
        trace = trace_csv(res).splitlines()
        assert trace[0] == "iteration,dual_value,primal_residual,rate_s"
        assert len(trace) == len(res.trace) + 1


class TestCentralized:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("utility,mu", [("combined", 0.0), ("diversity", 0.0),
                                            ("combined", 0.5)])
    def test_barrier_matches_conic_solver(self, seed, utility, mu):
        prob = random_instance(np.random.default_rng(50 + seed), utility, mu)
        got = prob.objective(solve_centralized_reference(prob).rates)
        assert got == pytest.approx(cvx_objective(prob), rel=1e-5, abs=1e-6)

    def test_pga_close(self):
        prob = random_instance(np.random.default_rng(4), "combined", 0.0)
        bar = prob.objective(solve_centralized_reference(prob).rates)
        pga = solve_centralized_reference(prob, method="pga")
        assert prob.max_violation(pga.rates) <= 1e-9
        assert prob.objective(pga.rates) == pytest.approx(bar, rel=1e-2)

    def test_zero_capacity(self):
        res = solve_centralized_reference(single(0.0))
        assert res.rates[("s", ("s", "d"))] == pytest.approx(0.0, abs=1e-9)

    def test_filtered_out(self):
        prob = AllocationProblem((SourceFlows("s", (), ()),), {("s", "d"): 5.0})
        assert solve_centralized_reference(prob).rates == {}

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            solve_centralized_reference(single(), method="simplex")


class TestRepair:
    def test_scales_most_violated_link(self):
        src = SourceFlows("s", (("a", "b", "c"), ("a", "c")), (1.0, 1.0))
        prob = AllocationProblem((src,), {("a", "b"): 1.0, ("b", "c"): 2.0, ("a", "c"): 5.0})
        fixed = repair_feasibility(prob, {("s", ("a", "b", "c")): 4.0, ("s", ("a", "c")): 1.0})
        assert fixed[("s", ("a", "b", "c"))] == pytest.approx(1.0)
        assert fixed[("s", ("a", "c"))] == 1.0


class TestProblemValidation:
    def test_unknown_link(self):
        src = SourceFlows("s", (("a", "b"),), (1.0,))
        with pytest.raises(DomainError):
            AllocationProblem((src,), {("b", "c"): 1.0})

    def test_trust_range(self):
        with pytest.raises(DomainError):
            SourceFlows("s", (("a", "b"),), (1.5,))

    def test_utility_name(self):
        with pytest.raises(DomainError):
            AllocationProblem((), {}, "max-min")
