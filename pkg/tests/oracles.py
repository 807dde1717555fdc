"""Slow, obviously-correct reference computations used by the tests."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def all_matrices(s, n, q):
    for entries in itertools.product(range(q), repeat=s * n):
        yield [list(entries[i * n : (i + 1) * n]) for i in range(s)]


def row_space(rows, q):
    """All vectors spanned by ``rows`` over GF(q), as a frozenset of tuples."""
    n = len(rows[0])
    out = set()
    for coeffs in itertools.product(range(q), repeat=len(rows)):
        out.add(tuple(sum(c * r[j] for c, r in zip(coeffs, rows)) % q for j in range(n)))
    return frozenset(out)


def count_subspaces(n, s, q):
    """Distinct row spaces of dimension ``s`` in GF(q)^n, by enumerating bases."""
    spaces = set()
    vectors = list(itertools.product(range(q), repeat=n))
    for basis in itertools.combinations(vectors, s):
        sp = row_space(basis, q)
        if len(sp) == q**s:
            spaces.add(sp)
    return len(spaces)


def is_rref_full_rank(rows, q):
    last = -1
    for i, row in enumerate(rows):
        lead = next((c for c, x in enumerate(row) if x), None)
        if lead is None or lead <= last or row[lead] != 1:
            return False
        if any(rows[k][lead] for k in range(len(rows)) if k != i):
            return False
        last = lead
    return True


def canonical_points(q, m):
    """Projective points as normalized vectors, ordered by leading position then lexicographically."""
    pts = set()
    for vec in itertools.product(range(q), repeat=m + 1):
        if not any(vec):
            continue
        lead = next(x for x in vec if x)
        inv = pow(lead, -1, q)
        pts.add(tuple(x * inv % q for x in vec))
    return sorted(pts, key=lambda p: (next(i for i, x in enumerate(p) if x), p))


@lru_cache(maxsize=None)
def brute_flats(q, m, t):
    """Every t-dimensional subspace of GF(q)^(m+1) as a set of 1-based point indices."""
    pts = canonical_points(q, m)
    index = {p: i + 1 for i, p in enumerate(pts)}
    flats = set()
    for basis in itertools.combinations(pts, t):
        sp = row_space(basis, q)
        if len(sp) != q**t:
            continue
        flats.add(frozenset(index[p] for p in sp if p in index))
    return flats


def covers(blocks, v, t, universe=None):
    """True if every t-subset of ``universe`` (default [1, v]) lies in a block."""
    universe = range(1, v + 1) if universe is None else sorted(universe)
    sets = [set(b) for b in blocks]
    return all(any(set(T) <= b for b in sets) for T in itertools.combinations(universe, t))


def corner_verify(net, x, S, label):
    """Enumerate every corner of the box freeing ``S``; returns a violating corner or None.

    For a network without ReLUs each margin is affine in the input, so its
    minimum over the box is attained at a corner.
    """
    x = np.asarray(x, dtype=np.float64)
    idx = np.asarray(sorted(S), dtype=np.int64) - 1
    for bits in itertools.product((0.0, 1.0), repeat=len(idx)):
        y = x.copy()
        y[idx] = bits
        scores = net.forward(y)
        others = np.delete(scores, label)
        if others.max() >= scores[label]:
            return y
    return None


def chain_costs(k, t, stats, sizes, T_complete):
    """Expected cost of every strictly decreasing refinement chain from ``k`` down to ``t``.

    Yields ``(chain, cost)``.  A chain ``k > k1 > ... > t`` costs
    ``|C(k, k1, t)| * (time(k1) + (1 - success(k1)) * cost(k1 > ... > t))`` with
    ``cost(t) = T_complete``.
    """
    if k == t:
        yield (t,), T_complete
        return
    for k1 in range(t, k):
        n = sizes.get((k, k1))
        if n is None:
            continue
        for tail, tail_cost in chain_costs(k1, t, stats, sizes, T_complete):
            r = stats.time(k1) + (1 - stats.success(k1)) * tail_cost
            yield (k,) + tail, n * r
