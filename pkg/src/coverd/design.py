"""Closed-form statistics of covering verification designs (CVDs) and candidate selection.

Partially inducing a BIBD ``(v', b, r, k', lambda)`` onto any ``v`` of its points
gives blocks whose mean size ``v k' / v'`` and variance
``mu (1 + (v-1)(k'-1)/(v'-1) - mu)`` do not depend on which points were kept.
Everything here is exact rational arithmetic except the Gaussian CDF used for
the block-size histogram estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .gf import primes
from .pg import PgParams

__all__ = [
    "MAX_K",
    "EPSILON",
    "CvdCandidate",
    "SizeDistribution",
    "normal_cdf",
    "normal_sf",
    "cvd_stats",
    "empirical_stats",
    "enumerate_candidates",
    "estimate_distribution",
    "schonheim_bound",
    "RatioRow",
    "RatioReport",
    "ratio_report",
]

MAX_K = 200
EPSILON = 0.01


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    """Standard normal upper tail ``1 - cdf(x)`` without cancellation."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@dataclass(frozen=True)
class CvdCandidate:
    """A PG covering together with the image size it will be induced onto."""

    params: PgParams
    v: int
    mean: Fraction
    variance: Fraction
    b: int

    @property
    def q(self) -> int:
        return self.params.q

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def t(self) -> int:
        return self.params.t

    @property
    def n_points(self) -> int:
        return self.params.n_points

    @property
    def block_size(self) -> int:
        return self.params.block_size

    @property
    def mu(self) -> float:
        return float(self.mean)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def overly_large(self, max_k: int = MAX_K) -> float:
        """Expected number of blocks larger than ``max_k`` under the Gaussian model."""
        if self.variance == 0:
            return float(self.b) if self.mean > max_k else 0.0
        return self.b * normal_sf((max_k - self.mu) / self.sigma)


def cvd_stats(params: PgParams, v: int) -> CvdCandidate:
    vp, kp = params.n_points, params.block_size
    if not 1 <= v <= vp:
        raise ValueError(f"need 1 <= v <= v'={vp}, got v={v}")
    mean = Fraction(v * kp, vp)
    variance = mean * (1 + Fraction((v - 1) * (kp - 1), vp - 1) - mean)
    assert 0 <= variance <= mean
    return CvdCandidate(params, v, mean, variance, params.n_blocks)


def empirical_stats(sizes: Iterable) -> tuple[Fraction, Fraction]:
    """Population mean and variance of block sizes, exactly.

    Accepts block sizes (a list or integer array) or the blocks themselves.
    """
    if isinstance(sizes, np.ndarray):
        return _array_moments(sizes)
    n = total = squares = 0
    for item in sizes:
        k = item if isinstance(item, (int, np.integer)) else len(item)
        k = int(k)
        n += 1
        total += k
        squares += k * k
    if n == 0:
        raise ValueError("empirical_stats of an empty collection")
    mean = Fraction(total, n)
    return mean, Fraction(squares, n) - mean * mean


def _array_moments(sizes: np.ndarray) -> tuple[Fraction, Fraction]:
    """Exact mean/variance of a large integer array without a Python loop."""
    sizes = np.asarray(sizes, dtype=np.int64)
    n = int(sizes.size)
    if n == 0:
        raise ValueError("empirical_stats of an empty collection")
    counts = np.bincount(sizes)
    ks = np.arange(counts.size)
    total = int((counts * ks).sum())
    squares = sum(int(c) * k * k for k, c in enumerate(counts.tolist()) if c)
    mean = Fraction(total, n)
    return mean, Fraction(squares, n) - mean * mean


def enumerate_candidates(
    v: int,
    t: int,
    min_k: float | None = None,
    max_k: int = MAX_K,
    eps: float = EPSILON,
) -> list[CvdCandidate]:
    """All prime-``q`` PG coverings usable as a first covering for ``v`` pixels.

    Keeps ``(q, m)`` with ``m >= t``, ``v' >= v``, mean block size at least
    ``min_k`` (default ``t``) and an expected count of blocks larger than
    ``max_k`` of at most ``eps``.  Sorted by ``(q, m)``.
    """
    if t < 2:
        raise ValueError("t must be >= 2")
    min_k = t if min_k is None else min_k
    if min_k < t:
        raise ValueError(f"min_k must be >= t, got {min_k}")
    out = []
    for q in primes():
        # mean decreases in q at m = t, so the first q failing there ends the search
        if Fraction(v * (q**t - 1), q ** (t + 1) - 1) < min_k:
            break
        m = t
        while True:
            params = PgParams(q, m, t)
            if Fraction(v * params.block_size, params.n_points) < min_k:
                break
            if params.n_points >= v:
                cand = cvd_stats(params, v)
                if cand.overly_large(max_k) <= eps:
                    out.append(cand)
            m += 1
    return out


@dataclass(frozen=True)
class SizeDistribution:
    """Estimated number of blocks of each size ``k``."""

    counts: Mapping[int, float]
    seed: int | Sequence[int] | None = None
    mode: str = "bernoulli"

    def total(self) -> float:
        return sum(self.counts.values())

    def as_array(self, upto: int) -> np.ndarray:
        out = np.zeros(upto + 1)
        for k, n in self.counts.items():
            if k <= upto:
                out[k] = n
        return out


def estimate_distribution(
    c: CvdCandidate,
    max_k: int = MAX_K,
    seed: int | Sequence[int] | None = None,
    mode: str = "bernoulli",
    min_size: int | None = None,
) -> SizeDistribution:
    """Gaussian estimate of a candidate's block-size histogram.

    The expected count of size ``k`` is ``b * P(k - 0.5 < Z <= k + 0.5)`` with
    ``Z ~ N(mu, sigma^2)``.  ``mode`` turns it into counts: ``"bernoulli"``
    adds one with probability equal to the fractional part (seeded),
    ``"round"`` rounds half to even, ``"expected"`` keeps the real values.
    Sizes run from ``min_size`` (default ``t``) to ``max_k``.
    """
    lo = c.t if min_size is None else min_size
    if mode not in ("bernoulli", "round", "expected"):
        raise ValueError(f"unknown mode {mode!r}")
    ks = list(range(lo, max_k + 1))
    if c.variance == 0:
        # v == v': every block keeps all k' points
        expected = {k: float(c.b) if k == c.block_size else 0.0 for k in ks}
    else:
        mu, sigma = c.mu, c.sigma
        expected = {
            k: c.b * (normal_cdf((k + 0.5 - mu) / sigma) - normal_cdf((k - 0.5 - mu) / sigma))
            for k in ks
        }
    if mode == "expected":
        return SizeDistribution(expected, seed, mode)
    if mode == "round":
        return SizeDistribution({k: int(round(x)) for k, x in expected.items()}, seed, mode)
    rng = np.random.default_rng(seed)
    counts = {}
    for k in ks:
        x = expected[k]
        whole = math.floor(x)
        counts[k] = int(whole + (rng.random() < x - whole))
    return SizeDistribution(counts, seed, mode)


def schonheim_bound(v: int, k: int, t: int) -> int:
    """Schönheim lower bound on the size of a ``C(v, k, t)`` covering."""
    if not 1 <= t <= k <= v:
        raise ValueError(f"need 1 <= t <= k <= v, got v={v}, k={k}, t={t}")
    bound = 1
    # unroll L(v,k,t) = ceil(v/k * L(v-1,k-1,t-1)) from the inside out
    for i in range(t - 1, -1, -1):
        bound = -(-(v - i) * bound // (k - i))
    return bound


@dataclass(frozen=True)
class RatioRow:
    q: int
    m: int
    mean: Fraction
    b: int
    bound: int

    @property
    def ratio(self) -> float:
        return self.b / self.bound


@dataclass(frozen=True)
class RatioReport:
    v: int
    t: int
    rows: list[RatioRow] = field(default_factory=list)

    @property
    def average(self) -> float:
        return sum(r.ratio for r in self.rows) / len(self.rows) if self.rows else float("nan")


def ratio_report(
    v: int,
    t: int,
    min_mean: float = 10,
    max_k: int = MAX_K,
    eps: float = EPSILON,
) -> RatioReport:
    """Compare each candidate's size with the Schönheim bound for ``(v, ceil(mu), t)``."""
    if min_mean < t:
        raise ValueError(f"min_mean must be >= t, got {min_mean}")
    rows = []
    for c in enumerate_candidates(v, t, min_k=min_mean, max_k=max_k, eps=eps):
        k = math.ceil(c.mean)
        rows.append(RatioRow(c.q, c.m, c.mean, c.b, schonheim_bound(v, k, t)))
    return RatioReport(v, t, rows)
