#!/usr/bin/env python3
# Choosing a design from measured backend behaviour.
# The backend here is scripted: its success rate falls with block size and each call has a fixed cost.

import math

import numpy as np

from coverd.engine import ensure_refinement_db
from coverd.nnverify import ScriptedBackend
from coverd.planner import choose_design, refine_plan, sample_kstats

t, v, max_k = 3, 150, 30
profile = {k: (1 / (1 + math.exp((k - 14) / 2)), 0.01 + 0.002 * k) for k in range(t, max_k + 1)}
backend = ScriptedBackend(profile, seed=0)

stats = sample_kstats(None, np.full(v, 0.5), t, backend, max_k=max_k, label=0)
for k in (3, 8, 14, 20, 30):
    print(f"k={k:2d}  samples={stats.samples[k]:3d}  success={stats.success(k):.3f}  time={stats.time(k):.3f}")

# covering sizes for splitting a failed block into smaller ones
db = ensure_refinement_db(t, max_k)
plan = refine_plan(stats, db, T_complete=0.5)
for k in (10, 20, 30):
    print(f"block of {k} refines into blocks of {plan.f_R[k]}, expected cost {plan.T[k]:.2f}")

cand, sel, scored = choose_design(v, t, stats, plan, seed=0, max_k=max_k)
for s in sorted(scored, key=lambda s: s.score)[:5]:
    print(f"q={s.candidate.q} m={s.candidate.m}  b={s.candidate.b:7d}  predicted {s.score:9.2f}s")
print("chosen:", cand.q, cand.m, "selection digest", sel.digest())
