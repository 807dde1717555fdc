import math
from fractions import Fraction

import numpy as np
import pytest

from coverd.design import SizeDistribution, enumerate_candidates, schonheim_bound
from coverd.nnverify import ScriptedBackend
from coverd.planner import (
    KStats,
    choose_design,
    estimate_t_complete,
    refine_plan,
    sample_kstats,
    score_candidate,
    score_candidates,
)

from oracles import chain_costs

X = np.full(60, 0.5)


def test_kstats_from_rates_requires_integer_counts():
    s = KStats.from_rates(2, {2: (0.25, 1.0)}, samples=4)
    assert (s.successes[2], s.samples[2], s.success(2), s.time(2)) == (1, 4, 0.25, 1.0)
    with pytest.raises(ValueError):
        KStats.from_rates(2, {2: (0.3, 1.0)}, samples=4)


def test_all_success_profile_never_reduces():
    be = ScriptedBackend({k: (1.0, 0.1) for k in range(2, 61)})
    stats = sample_kstats(None, X, 2, be, max_k=40, label=0)
    assert all(stats.samples[k] == 400 for k in range(2, 41))
    assert all(stats.success(k) == 1.0 for k in range(2, 41))
    assert stats.time(10) == pytest.approx(0.1)


@pytest.mark.parametrize("k0", [5, 12])
def test_reduction_after_n_fail_zero_sizes(k0):
    be = ScriptedBackend({k: (1.0 if k <= k0 else 0.0, 0.1) for k in range(2, 61)})
    stats = sample_kstats(None, X, 2, be, max_k=60, label=0)
    assert all(stats.samples[k] == 400 for k in range(2, k0 + 11))
    assert all(stats.samples[k] == 24 for k in range(k0 + 11, 61))


def test_reduction_is_per_worker():
    # with success 1/2 a single worker occasionally sees zero hits; workers must count on their own
    be = ScriptedBackend({k: (0.0 if k >= 10 else 1.0, 0.1) for k in range(2, 61)}, seed=3)
    stats = sample_kstats(None, X, 2, be, max_k=30, n_samples=16, reduced_n=8, workers=8, n_fail=2, label=0)
    assert stats.samples[11] == 16 and stats.samples[12] == 8


def test_sample_counts_must_divide():
    with pytest.raises(ValueError):
        sample_kstats(None, X, 2, ScriptedBackend({}), n_samples=401, label=0)


def test_success_estimate_near_profile():
    p = 0.9405
    be = ScriptedBackend({k: (p, 1.0) for k in range(4, 35)}, seed=11)
    stats = sample_kstats(None, np.full(784, 0.5), 4, be, max_k=34, label=0)
    assert abs(stats.success(34) - p) <= 3 * math.sqrt(p * (1 - p) / 400)


def test_estimator_consistency_over_repetitions():
    p, n, inside = 0.3, 400, 0
    for rep in range(1000):
        be = ScriptedBackend({3: (p, 1.0)}, seed=rep)
        stats = sample_kstats(None, X[:10], 3, be, max_k=3, seed=rep, label=0)
        inside += abs(stats.success(3) - p) <= 3 * math.sqrt(p * (1 - p) / n)
    assert inside >= 990


def test_t_complete_estimate():
    be = ScriptedBackend({3: (1.0, 2.5)}, complete=True)
    assert estimate_t_complete(None, X, 3, be, label=0) == 2.5


def _random_stats(rng, t, max_k, exact=True):
    rates = {}
    for k in range(t, max_k + 1):
        p = Fraction(int(rng.integers(0, 9)), 8)
        secs = Fraction(int(rng.integers(1, 50)), 10)
        rates[k] = (p, secs)
    s = KStats(t)
    for k, (p, secs) in rates.items():
        s.successes[k], s.samples[k], s.total_time[k] = int(p * 8), 8, secs * 8
    return s


def _random_sizes(rng, t, max_k, drop=0.0):
    sizes = {}
    for k in range(t + 1, max_k + 1):
        for k2 in range(t, k):
            if k2 < k - 1 and rng.random() < drop:
                continue
            sizes[(k, k2)] = schonheim_bound(k, k2, t) + int(rng.integers(0, 3))
    return sizes


@pytest.mark.parametrize("t", [2, 3, 4])
def test_dp_matches_chain_enumeration(t):
    rng = np.random.default_rng(t)
    for _ in range(5):
        stats = _random_stats(rng, t, 15)
        sizes = _random_sizes(rng, t, 15, drop=0.3)
        plan = refine_plan(stats, sizes, Fraction(7, 2))
        for k in range(t + 1, 16):
            chains = list(chain_costs(k, t, stats, sizes, Fraction(7, 2)))
            best = min(c for _, c in chains)
            assert plan.T[k] == best
            firsts = [chain[1] for chain, c in chains if c == best]
            assert plan.f_R[k] == max(firsts)
            assert t <= plan.f_R[k] < k


def test_dp_ties_prefer_larger_block():
    stats = KStats.from_rates(2, {k: (0.0, 1.0) for k in range(2, 6)})
    sizes = {(3, 2): 3, (4, 2): 6, (4, 3): 4, (5, 2): 10, (5, 3): 10, (5, 4): 5}
    plan = refine_plan(stats, sizes, 1.0)
    # R(2) = 2, R(3) = 1 + 3 * 2 = 7; T(4) = min(6 * 2, 4 * 7) = 12 via 2
    assert plan.T[4] == 12 and plan.f_R[4] == 2
    stats = KStats.from_rates(2, {2: (0.0, 1.0), 3: (1.0, 2.0), 4: (1.0, 1.0), 5: (0.0, 1.0)})
    sizes = {(3, 2): 3, (4, 2): 6, (4, 3): 3, (5, 2): 10, (5, 3): 5, (5, 4): 10}
    plan = refine_plan(stats, sizes, 1.0)
    # T(5): via 3 costs 5 * 2 = 10, via 4 costs 10 * 1 = 10; the tie goes to 4
    assert plan.T[5] == 10 and plan.f_R[5] == 4


def test_dp_upper_bound_by_certain_success():
    stats = KStats.from_rates(3, {k: (1.0 if k == 6 else 0.5, 0.5 + k) for k in range(3, 12)}, samples=2)
    sizes = {(k, k2): schonheim_bound(k, k2, 3) for k in range(4, 12) for k2 in range(3, k)}
    plan = refine_plan(stats, sizes, 10.0)
    for k in range(7, 12):
        assert plan.T[k] <= sizes[(k, 6)] * stats.time(6)


def test_dp_missing_everything_is_an_error():
    stats = KStats.from_rates(2, {k: (0.5, 1.0) for k in range(2, 5)}, samples=2)
    with pytest.raises(KeyError):
        refine_plan(stats, {(3, 2): 3}, 1.0)


def test_score_formula_and_properties():
    stats = KStats.from_rates(2, {2: (0.5, 1.0), 3: (0.25, 2.0), 4: (1.0, 3.0)}, samples=4)
    plan = refine_plan(stats, {(3, 2): 3, (4, 2): 6, (4, 3): 4}, 5.0)
    assert score_candidate(SizeDistribution({2: 0, 3: 0, 4: 0}), stats, plan) == 0
    dist = SizeDistribution({2: 10, 3: 4, 4: 1})
    expected = 10 * (1.0 + 0.5 * 5.0) + 4 * (2.0 + 0.75 * plan.T[3]) + 1 * 3.0
    assert score_candidate(dist, stats, plan) == pytest.approx(expected)
    slower = KStats.from_rates(2, {2: (0.5, 1.5), 3: (0.25, 2.0), 4: (1.0, 3.0)}, samples=4)
    assert score_candidate(dist, slower, refine_plan(slower, {(3, 2): 3, (4, 2): 6, (4, 3): 4}, 5.0)) >= expected
    # sizes below t are ignored
    assert score_candidate(SizeDistribution({0: 100, 1: 5}), stats, plan) == 0


def _synthetic_784_stats():
    # success falls through 0.9405 at k = 34 and 0.66 at k = 41
    a, b = math.log(0.9405 / 0.0595), math.log(0.66 / 0.34)
    slope = (a - b) / 7

    def success(k):
        return 1 / (1 + math.exp(-(a - slope * (k - 34))))

    rates = {k: (round(success(k) * 400) / 400, 0.02 + 0.0005 * k) for k in range(4, 201)}
    stats = KStats.from_rates(4, rates, samples=400)
    sizes = {(k, k2): schonheim_bound(k, k2, 4) for k in range(5, 201) for k2 in range(4, k)}
    return stats, refine_plan(stats, sizes, 2.0)


def test_784_pixel_t4_design_ordering():
    stats, plan = _synthetic_784_stats()
    assert (plan.f_R[34], plan.f_R[41]) == (28, 33)
    scores = {(s.candidate.q, s.candidate.m): s.score for s in score_candidates(784, 4, stats, plan)}
    assert scores[(23, 4)] < scores[(19, 4)]


def test_choose_design_minimizes_score():
    stats, plan = _synthetic_784_stats()
    for seed in range(3):
        cand, sel, scored = choose_design(784, 4, stats, plan, seed=seed)
        best = min(s.score for s in scored)
        assert next(s.score for s in scored if s.candidate == cand) == best
        assert len(set(sel.L)) == 784 and max(sel.L) <= cand.n_points
        assert len(scored) == len(enumerate_candidates(784, 4))


def test_choose_design_single_and_empty():
    stats = KStats.from_rates(2, {k: (0.5, 1.0) for k in range(2, 8)}, samples=2)
    sizes = {(k, k2): schonheim_bound(k, k2, 2) for k in range(3, 8) for k2 in range(2, k)}
    plan = refine_plan(stats, sizes, 1.0)
    cand, sel, scored = choose_design(7, 2, stats, plan, seed=0, min_k=3)
    assert len(scored) == 1 and (cand.q, cand.m) == (2, 2)
    with pytest.raises(ValueError, match="min_k"):
        choose_design(7, 2, stats, plan, min_k=4)
