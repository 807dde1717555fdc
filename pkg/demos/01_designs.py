#!/usr/bin/env python3
# Covering designs from projective geometry, and what happens when we keep only some points.

import itertools
from collections import Counter

import numpy as np

from coverd.design import cvd_stats, empirical_stats, enumerate_candidates, ratio_report, schonheim_bound
from coverd.pg import InducedSelection, PgParams, cvd_block_sizes, cvd_stream, pg_covering

# lines of the plane over GF(2): 7 points, 7 lines, 3 points per line
fano = PgParams(q=2, m=2, t=2)
lines = list(pg_covering(fano))
for line in lines:
    print(line)
pairs = Counter(p for b in lines for p in itertools.combinations(b, 2))
print("every pair on exactly one line:", set(pairs.values()) == {1} and len(pairs) == 21)

# keep 4 of the 7 points; blocks shrink but still cover every pair of what is left
sel = InducedSelection((2, 5, 6, 7))
print(list(cvd_stream(fano, sel)))

# block sizes of a random selection, against the exact mean and variance
p = PgParams(q=23, m=4, t=4)
c = cvd_stats(p, 784)
print(p.n_points, "points,", c.b, "blocks, mean size", round(c.mu, 3), "variance", round(float(c.variance), 3))

small = PgParams(q=3, m=4, t=3)
sel = InducedSelection.draw(small.n_points, 100, seed=1)
sizes = cvd_block_sizes(small, sel)
print("empirical", empirical_stats(sizes), "exact", (cvd_stats(small, 100).mean, cvd_stats(small, 100).variance))
print("histogram of sizes:", np.bincount(sizes))

# which designs are usable for 784 pixels and t = 4
cands = enumerate_candidates(784, 4)
print(len(cands), "candidates")
for cand in cands[:5]:
    print(f"  q={cand.q:3d} m={cand.m}  b={cand.b:>10d}  mean={cand.mu:7.2f}")

# how far the designs are from the general lower bound
print("lower bound for C(784, 35, 4):", schonheim_bound(784, 35, 4))
for t in (4, 5):
    print(f"t={t}: average size / bound = {ratio_report(784, t).average:.3f}")
