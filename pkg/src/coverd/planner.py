"""Choosing a covering verification design by predicted analysis time.

The planner samples random pixel sets of each size to estimate how often the
incomplete backend succeeds and how long it takes, derives by dynamic
programming the best block size to refine into after a failure, and scores
every candidate design by its expected total time.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .design import (
    EPSILON,
    MAX_K,
    CvdCandidate,
    SizeDistribution,
    enumerate_candidates,
    estimate_distribution,
)
from .nnverify import Network, make_neighborhood
from .pg import InducedSelection

__all__ = [
    "KStats",
    "RefinementPlan",
    "ScoredCandidate",
    "sample_kstats",
    "estimate_t_complete",
    "refine_plan",
    "score_candidate",
    "score_candidates",
    "choose_design",
]

log = logging.getLogger(__name__)

N_SAMPLES = 400
REDUCED_SAMPLES = 24
N_FAIL = 10
WORKERS = 8
T_COMPLETE_SAMPLES = 20


@dataclass
class KStats:
    """Per-size success counts and mean backend time."""

    t: int
    successes: dict[int, int] = field(default_factory=dict)
    samples: dict[int, int] = field(default_factory=dict)
    total_time: dict[int, float] = field(default_factory=dict)

    @classmethod
    def from_rates(cls, t: int, rates: Mapping[int, tuple[float, float]], samples: int = 1) -> "KStats":
        """Stats with exactly the given ``k -> (success, time)`` values.

        ``success * samples`` must be an integer.
        """
        out = cls(t)
        for k, (p, secs) in rates.items():
            hits = p * samples
            if abs(hits - round(hits)) > 1e-9:
                raise ValueError(f"success {p} is not a multiple of 1/{samples}")
            out.successes[k] = int(round(hits))
            out.samples[k] = samples
            out.total_time[k] = secs * samples
        return out

    def record(self, k: int, ok: bool, secs: float) -> None:
        self.successes[k] = self.successes.get(k, 0) + int(ok)
        self.samples[k] = self.samples.get(k, 0) + 1
        self.total_time[k] = self.total_time.get(k, 0.0) + secs

    def merge(self, other: "KStats") -> None:
        for k, n in other.samples.items():
            self.samples[k] = self.samples.get(k, 0) + n
            self.successes[k] = self.successes.get(k, 0) + other.successes[k]
            self.total_time[k] = self.total_time.get(k, 0.0) + other.total_time[k]

    @property
    def sizes(self) -> list[int]:
        return sorted(k for k, n in self.samples.items() if n)

    def success(self, k: int) -> float:
        return self.successes[k] / self.samples[k]

    def time(self, k: int) -> float:
        return self.total_time[k] / self.samples[k]

    def __contains__(self, k: int) -> bool:
        return self.samples.get(k, 0) > 0


def _charge(backend, verdict, started: float) -> float:
    if getattr(backend, "virtual", False):
        return verdict.cost
    return time.perf_counter() - started


def sample_kstats(
    net: Network,
    x: np.ndarray,
    t: int,
    backend,
    max_k: int = MAX_K,
    n_samples: int = N_SAMPLES,
    n_fail: int = N_FAIL,
    reduced_n: int = REDUCED_SAMPLES,
    workers: int = WORKERS,
    seed: int | None = 0,
    label: int | None = None,
) -> KStats:
    """Estimate success rate and time of ``backend`` for every size ``t..max_k``.

    Each worker draws its share of random pixel sets per size, smallest size
    first, and drops to its share of ``reduced_n`` once it has seen ``n_fail``
    sizes where none of its own samples succeeded.
    """
    if n_samples % workers or reduced_n % workers:
        raise ValueError(f"sample counts {n_samples}, {reduced_n} must divide among {workers} workers")
    x = np.asarray(x, dtype=np.float64)
    v = x.size
    max_k = min(max_k, v)
    label = int(net.classify(x)) if label is None else label
    total = KStats(t)
    for w in range(workers):
        rng = np.random.default_rng([0 if seed is None else seed, w])
        quota, zero_sizes = n_samples // workers, 0
        mine = KStats(t)
        for k in range(t, max_k + 1):
            if zero_sizes >= n_fail:
                quota = reduced_n // workers
            hits = 0
            for _ in range(quota):
                S = np.sort(rng.choice(v, k, replace=False)) + 1
                started = time.perf_counter()
                verdict = backend(net, make_neighborhood(x, S), label, w)
                mine.record(k, verdict.verified, _charge(backend, verdict, started))
                hits += verdict.verified
            if quota and hits == 0:
                zero_sizes += 1
        total.merge(mine)
    return total


def estimate_t_complete(
    net: Network,
    x: np.ndarray,
    t: int,
    complete,
    n: int = T_COMPLETE_SAMPLES,
    seed: int | None = 0,
    label: int | None = None,
) -> float:
    """Mean time of the complete backend over ``n`` random t-subsets."""
    x = np.asarray(x, dtype=np.float64)
    label = int(net.classify(x)) if label is None else label
    rng = np.random.default_rng([0 if seed is None else seed, 1 << 20])
    spent = 0.0
    for _ in range(n):
        S = np.sort(rng.choice(x.size, t, replace=False)) + 1
        started = time.perf_counter()
        verdict = complete(net, make_neighborhood(x, S), label)
        spent += _charge(complete, verdict, started)
    return spent / n


@dataclass(frozen=True)
class RefinementPlan:
    t: int
    T: dict[int, float]
    f_R: dict[int, int]
    T_complete: float

    @property
    def max_k(self) -> int:
        return max(self.T)

    def R(self, stats: KStats, k: int) -> float:
        """Expected cost of a block of size ``k``: one attempt plus refinement on failure."""
        return stats.time(k) + (1 - stats.success(k)) * self.T[k]


SizeLookup = Callable[[int, int], "int | None"]


def _size_lookup(db, t: int) -> SizeLookup:
    if hasattr(db, "size"):
        return lambda k, k2: db.size(k, k2, t)
    return lambda k, k2: db.get((k, k2))


def refine_plan(stats: KStats, db, T_complete: float, max_k: int | None = None) -> RefinementPlan:
    """Expected refinement cost ``T`` and best refinement size ``f_R`` per block size.

    ``T(t) = T_complete`` and for ``k > t``
    ``T(k) = min_{t <= k2 < k} |C(k, k2, t)| * R(k2)``, ties going to the larger
    ``k2``.  ``db`` is a :class:`~coverd.coverdb.CoverDB` or a mapping
    ``(k, k2) -> size``; absent coverings are not considered.
    """
    t = stats.t
    max_k = max(stats.sizes) if max_k is None else max_k
    size = _size_lookup(db, t)
    T = {t: T_complete}
    f_R: dict[int, int] = {}
    R = {}
    for k in range(t + 1, max_k + 1):
        R[k - 1] = stats.time(k - 1) + (1 - stats.success(k - 1)) * T[k - 1]
        best = best_k2 = None
        for k2 in range(k - 1, t - 1, -1):
            n = size(k, k2)
            if n is None:
                continue
            cost = n * R[k2]
            if best is None or cost < best:
                best, best_k2 = cost, k2
        if best is None:
            raise KeyError(f"no refinement covering C({k}, k2, {t}) available for any k2")
        T[k], f_R[k] = best, best_k2
    return RefinementPlan(t, T, f_R, T_complete)


def score_candidate(dist: SizeDistribution, stats: KStats, plan: RefinementPlan) -> float:
    """Predicted analysis time: ``sum_k N_k * (time(k) + (1 - success(k)) * T(k))`` over ``k >= t``."""
    total = 0.0
    for k in sorted(dist.counts):
        n = dist.counts[k]
        if n and k >= plan.t:
            total += n * (stats.time(k) + (1 - stats.success(k)) * plan.T[k])
    return total


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: CvdCandidate
    score: float
    dist: SizeDistribution


def score_candidates(
    v: int,
    t: int,
    stats: KStats,
    plan: RefinementPlan,
    seed: int | None = 0,
    max_k: int = MAX_K,
    eps: float = EPSILON,
    min_k: float | None = None,
) -> list[ScoredCandidate]:
    """Every candidate with its estimated size histogram and predicted time."""
    upto = min(max_k, plan.max_k)
    out = []
    for c in enumerate_candidates(v, t, min_k=min_k, max_k=max_k, eps=eps):
        dseed = None if seed is None else [seed, c.q, c.m]
        dist = estimate_distribution(c, max_k=upto, seed=dseed)
        out.append(ScoredCandidate(c, score_candidate(dist, stats, plan), dist))
    return out


def choose_design(
    v: int,
    t: int,
    stats: KStats,
    plan: RefinementPlan,
    seed: int | None = 0,
    max_k: int = MAX_K,
    eps: float = EPSILON,
    min_k: float | None = None,
    scored: Sequence[ScoredCandidate] | None = None,
) -> tuple[CvdCandidate, InducedSelection, list[ScoredCandidate]]:
    """Fastest predicted candidate (ties to fewer blocks) and a random ``L`` for it."""
    if scored is None:
        scored = score_candidates(v, t, stats, plan, seed, max_k, eps, min_k)
    if not scored:
        raise ValueError(
            f"no candidate design for v={v}, t={t}; lower min_k or raise eps/max_k"
        )
    best = min(scored, key=lambda s: (s.score, s.candidate.b))
    sel = InducedSelection.draw(best.candidate.n_points, v, seed)
    return best.candidate, sel, list(scored)
