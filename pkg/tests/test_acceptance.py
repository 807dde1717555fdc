"""Acceptance checks, one per criterion.

Each check prints a single ``criterion N: PASS|FAIL`` line with the measured
values and elapsed time; the lines are repeated in the pytest summary.  Run
``python tests/test_acceptance.py`` to get only those lines.
"""

import contextlib
import io
import itertools
import math
import subprocess
import sys
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coverd.cli import main  # noqa: E402
from coverd.design import (  # noqa: E402
    cvd_stats,
    empirical_stats,
    enumerate_candidates,
    estimate_distribution,
)
from coverd.engine import Outcome, RunConfig, ensure_refinement_db, verify_ball  # noqa: E402
from coverd.nnverify import ScriptedBackend  # noqa: E402
from coverd.pg import InducedSelection, PgParams, cvd_block_sizes, cvd_stream  # noqa: E402
from coverd.planner import (  # noqa: E402
    KStats,
    choose_design,
    refine_plan,
    sample_kstats,
    score_candidate,
)

import conftest  # noqa: E402
from conftest import calibrated_affine_net  # noqa: E402
from oracles import chain_costs  # noqa: E402

SMALL_B = 150_000  # largest design counted as a "small instance"


def report(n, ok, detail, started, budget):
    took = time.perf_counter() - started
    ok = ok and took < budget
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}  ({took:.1f}s, budget {budget:g}s)"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok


def cli(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(list(argv))
    return code, buf.getvalue()


def test_criterion_01_fano_golden():
    started = time.perf_counter()
    code, out = cli("covergen", "pg", "--q", "2", "--m", "2", "--t", "2")
    blocks = [tuple(map(int, line.split())) for line in out.splitlines()[1:]]
    points = Counter(p for b in blocks for p in b)
    pairs = Counter(pair for b in blocks for pair in itertools.combinations(sorted(b), 2))
    ok = (
        code == 0
        and len(blocks) == 7
        and all(len(b) == 3 for b in blocks)
        and points == {p: 3 for p in range(1, 8)}
        and pairs == {pair: 1 for pair in itertools.combinations(range(1, 8), 2)}
    )
    assert report(1, ok, f"b={len(blocks)} replication={set(points.values())} pair-counts={set(pairs.values())}",
                  started, 1)


def test_criterion_02_exact_moments():
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    done, bad = 0, []
    while done < 200:
        q = int(rng.choice([2, 3, 5, 7]))
        t = int(rng.integers(2, 4))
        m = int(rng.integers(t, t + 3))
        p = PgParams(q, m, t)
        if p.n_blocks > SMALL_B:
            continue
        v = int(rng.integers(1, p.n_points + 1))
        sel = InducedSelection.draw(p.n_points, v, seed=int(rng.integers(1 << 30)))
        c = cvd_stats(p, v)
        got = empirical_stats(cvd_block_sizes(p, sel))
        if got != (c.mean, c.variance) or not c.variance <= c.mean:
            bad.append((q, m, t, v))
        done += 1
    assert report(2, not bad, f"{done} instances, {len(bad)} mismatches", started, 60)


def test_criterion_03_784_pixel_design_statistics():
    started = time.perf_counter()
    a = cvd_stats(PgParams(23, 4, 4), 784)
    b = cvd_stats(PgParams(19, 4, 4), 784)
    ok = (
        a.b == 292561 and b.b == 137561
        and abs(a.mu - 34.087) <= 5e-3 and abs(float(a.variance) - 32.518) <= 5e-3
        and abs(b.mu - 41.263) <= 5e-3 and abs(float(b.variance) - 38.867) <= 5e-3
    )
    detail = (f"(23,4): mu={a.mu:.4f} var={float(a.variance):.4f} b={a.b}; "
              f"(19,4): mu={b.mu:.4f} var={float(b.variance):.4f} b={b.b}")
    assert report(3, ok, detail, started, 1)


def test_criterion_04_pg_parameters():
    started = time.perf_counter()
    p = PgParams(3, 5, 5)
    assert report(4, (p.n_points, p.block_size) == (364, 121), f"v'={p.n_points} k'={p.block_size}", started, 1)


def test_criterion_05_ratio_report():
    started = time.perf_counter()
    code, out = cli("ratio-report", "--v", "784", "--min-mean", "10")
    avg = {int(line.split(",")[0]): float(line.split(",")[-1]) for line in out.splitlines() if ",average," in line}
    ok = code == 0 and abs(avg.get(4, 0) - 0.92) <= 0.05 and abs(avg.get(5, 0) - 0.85) <= 0.05
    assert report(5, ok, f"t=4 average {avg.get(4)}, t=5 average {avg.get(5)}", started, 30)


def test_criterion_06_candidate_count():
    started = time.perf_counter()
    cands = enumerate_candidates(784, 4, 4, 200, 0.01)
    pairs = {(c.q, c.m) for c in cands}
    ok = abs(len(cands) - 50) <= 3 and {(23, 4), (19, 4)} <= pairs
    assert report(6, ok, f"{len(cands)} candidates, (23,4) and (19,4) present={ {(23, 4), (19, 4)} <= pairs}",
                  started, 10)


def _exhaustive_affine(net, x, t):
    """Minimum of every class margin over every t-pixel box, by enumerating all t-subsets."""
    (w1, b1), (w2, b2) = [(layer.weight, layer.bias) for layer in net.layers]
    w, b = w2 @ w1, w2 @ b1 + b2
    label = int(net.classify(x))
    d = w[label] - np.delete(w, label, axis=0)
    c = b[label] - np.delete(b, label)
    drops = np.minimum(0.0, d) - d * x
    subsets = np.array(list(itertools.combinations(range(x.size), t)))
    worst = (d @ x + c)[:, None] + drops[:, subsets].sum(axis=2)
    return bool(worst.min() > 0)


def test_criterion_07_end_to_end_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(7)
    agree, witnesses_ok, runs = 0, True, 0
    for i in range(30):
        t = 2 + i % 2
        net, x = calibrated_affine_net(rng, 49, t, robust=bool(i // 2 % 2), gap=float(rng.uniform(0.01, 0.5)))
        truth = _exhaustive_affine(net, x, t)
        verdict, _ = verify_ball(net, x, RunConfig(t=t, seed=i))
        runs += 1
        agree += (verdict.status is Outcome.ROBUST) == truth and verdict.status is not Outcome.UNKNOWN
        if verdict.witness is not None:
            w = verdict.witness
            scores = net.forward(w)
            witnesses_ok &= bool(
                np.count_nonzero(w != x) <= t and ((0 <= w) & (w <= 1)).all()
                and np.delete(scores, 0).max() >= scores[0]
            )
    assert report(7, agree == runs and witnesses_ok, f"{agree}/{runs} verdicts agree, witnesses valid={witnesses_ok}",
                  started, 600)


def test_criterion_08_partition_invariance():
    started = time.perf_counter()
    p = PgParams(3, 3, 2)
    sel = InducedSelection.draw(p.n_points, 25, seed=8)
    whole = Counter(cvd_stream(p, sel))
    streams_ok = all(
        sum((Counter(cvd_stream(p, sel, w, n)) for w in range(n)), Counter()) == whole for n in (1, 2, 3, 8)
    )
    rng = np.random.default_rng(8)
    verdicts = {}
    for robust in (True, False):
        net, x = calibrated_affine_net(rng, 40, 2, robust)
        verdicts[robust] = {
            verify_ball(net, x, RunConfig(t=2, workers=n, n_samples=24, reduced_samples=24))[0].status
            for n in (1, 2, 3, 8)
        }
    verdict_ok = verdicts == {True: {Outcome.ROBUST}, False: {Outcome.NON_ROBUST}}
    assert report(8, streams_ok and verdict_ok, f"stream unions equal={streams_ok}, verdicts per net="
                  f"{sorted(o.value for s in verdicts.values() for o in s)}", started, 30)


MEMORY_SCRIPT = """
import itertools, resource
from coverd.pg import InducedSelection, PgParams, cvd_stream
p = PgParams(17, 5, 5)
n = sum(1 for _ in itertools.islice(cvd_stream(p, InducedSelection.draw(p.n_points, 784, seed=0)), 100000))
print(n, resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)
"""


def test_criterion_09_streaming_memory():
    started = time.perf_counter()
    done = subprocess.run([sys.executable, "-c", MEMORY_SCRIPT], capture_output=True, text=True, timeout=300)
    n, kib = map(int, done.stdout.split())
    mib = kib / 1024
    assert report(9, done.returncode == 0 and n == 100000 and mib < 256,
                  f"{n} blocks, peak RSS {mib:.0f} MiB", started, 300)


def _exact(stats):
    out = KStats(stats.t)
    for k in stats.sizes:
        out.successes[k], out.samples[k] = stats.successes[k], stats.samples[k]
        out.total_time[k] = Fraction(stats.total_time[k])
    return out


def test_criterion_10_planner_optimality():
    started = time.perf_counter()
    max_k, ok, checked = 15, True, 0
    for t, v in ((2, 60), (3, 120)):
        profile = {k: (1 / (1 + math.exp(k - 9)), 0.01 * k + 0.05) for k in range(t, max_k + 1)}
        stats = _exact(sample_kstats(None, np.full(v, 0.5), t, ScriptedBackend(profile, seed=t), max_k=max_k, label=0))
        db = ensure_refinement_db(t, max_k)
        sizes = {(k, k2): db.size(k, k2, t) for k in range(t + 1, max_k + 1) for k2 in range(t, k)}
        T_complete = Fraction(3, 2)
        plan = refine_plan(stats, sizes, T_complete)
        for k in range(t + 1, max_k + 1):
            chains = list(chain_costs(k, t, stats, sizes, T_complete))
            best = min(c for _, c in chains)
            ok &= plan.T[k] == best and plan.f_R[k] == max(ch[1] for ch, c in chains if c == best)
            checked += 1
        cand, _, scored = choose_design(v, t, stats, plan, seed=t, max_k=max_k)
        rescored = {s.candidate: score_candidate(s.dist, stats, plan) for s in scored}
        ok &= len(rescored) > 1 and rescored[cand] == min(rescored.values())
    assert report(10, ok, f"{checked} DP entries match chain enumeration, design choice minimal={ok}", started, 60)


def test_criterion_11_distribution_fit():
    started = time.perf_counter()
    p = PgParams(5, 5, 3)
    c = cvd_stats(p, 120)
    sizes = cvd_block_sizes(p, InducedSelection.draw(p.n_points, 120, seed=11))
    upto = 200
    actual = np.bincount(sizes, minlength=upto + 1)[p.t : upto + 1] / c.b
    est = estimate_distribution(c, mode="expected").as_array(upto)[p.t : upto + 1] / c.b
    tv = 0.5 * float(np.abs(actual - est).sum())
    assert report(11, tv <= 0.05, f"TV distance {tv:.4f} over sizes {p.t}..{upto}", started, 60)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
