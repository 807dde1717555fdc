"""Verifying robustness to perturbations of any ``t`` pixels.

Each worker streams its share of the chosen covering verification design and
keeps a depth-first stack of pixel sets still to prove.  A popped set is sent
to the incomplete backend; on failure it is either replaced by a covering of
itself with smaller blocks or, at size ``t``, handed to the complete backend.
The image is robust once every worker has drained its stream and stack.

Workers share three things only: the read-only covering database, the set of
t-blocks already submitted to the complete backend, and a stop flag raised by
the first counterexample.
"""

from __future__ import annotations

import enum
import logging
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .coverdb import CoverDB, CoveringBuilder, rename_to
from .design import EPSILON, MAX_K
from .nnverify import AffineBackend, IbpBackend, Network, Status, make_neighborhood
from .pg import Block, InducedSelection, PgParams, cvd_stream
from .planner import (
    N_FAIL,
    N_SAMPLES,
    REDUCED_SAMPLES,
    T_COMPLETE_SAMPLES,
    KStats,
    RefinementPlan,
    ScoredCandidate,
    choose_design,
    estimate_t_complete,
    refine_plan,
    sample_kstats,
    score_candidates,
)

__all__ = [
    "RunConfig",
    "RunStats",
    "Outcome",
    "Verdict",
    "AnalysisPlan",
    "make_plan",
    "ensure_refinement_db",
    "refine",
    "verify_ball",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    t: int
    workers: int = 8
    timeout: float | None = None
    seed: int = 0
    max_k: int = MAX_K
    min_k: float | None = None
    eps: float = EPSILON
    n_samples: int = N_SAMPLES
    reduced_samples: int = REDUCED_SAMPLES
    n_fail: int = N_FAIL
    t_complete_samples: int = T_COMPLETE_SAMPLES
    scheduler: str = "round-robin"  # or "threads"
    cap: int = 500_000

    def __post_init__(self):
        if self.t < 2:
            raise ValueError("t must be >= 2")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.scheduler not in ("round-robin", "threads"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")


class Outcome(enum.Enum):
    ROBUST = "Robust"
    NON_ROBUST = "NonRobust"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Verdict:
    status: Outcome
    witness: np.ndarray | None = None
    unresolved: int = 0  # t-blocks neither verified nor falsified
    timed_out: bool = False

    @property
    def exit_code(self) -> int:
        return {Outcome.ROBUST: 0, Outcome.NON_ROBUST: 1, Outcome.UNKNOWN: 2}[self.status]


@dataclass
class RunStats:
    incomplete_calls: int = 0
    calls_by_size: Counter = field(default_factory=Counter)
    complete_calls: int = 0
    max_size: int = 0
    min_size: int = 0
    refinements: int = 0
    streamed_blocks: int = 0
    skipped_small: int = 0
    wall_time: float = 0.0
    virtual_time: float = 0.0
    verdict: str = ""

    def note_call(self, k: int) -> None:
        self.incomplete_calls += 1
        self.calls_by_size[k] += 1
        self.max_size = max(self.max_size, k)
        self.min_size = k if self.min_size == 0 else min(self.min_size, k)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["calls_by_size"] = dict(sorted(self.calls_by_size.items()))
        return d


@dataclass(frozen=True)
class AnalysisPlan:
    """Everything decided before the analysis starts."""

    stats: KStats
    plan: RefinementPlan
    params: PgParams
    selection: InducedSelection
    scored: tuple[ScoredCandidate, ...]
    db: CoverDB
    label: int


@lru_cache(maxsize=8)
def _warm_builder(t: int, max_k: int, cap: int) -> CoveringBuilder:
    builder = CoveringBuilder(cap=cap)
    builder.warm(t, max_k)
    return builder


def ensure_refinement_db(t: int, max_k: int, db: CoverDB | None = None, cap: int = 500_000) -> CoverDB:
    """Fill ``db`` (in memory) with every missing ``C(k, k2, t)`` for ``t <= k2 < k <= max_k``."""
    db = db if db is not None else CoverDB()
    missing = [
        (k, k2) for k in range(t + 1, max_k + 1) for k2 in range(t, k) if db.size(k, k2, t) is None
    ]
    if missing:
        builder = _warm_builder(t, max_k, cap)
        for k, k2 in missing:
            cover = builder.get(k, k2, t)
            if cover is not None:
                db.put(cover, write=False)
    return db


def make_plan(
    net: Network,
    x: np.ndarray,
    cfg: RunConfig,
    backend=None,
    complete=None,
    db: CoverDB | None = None,
) -> AnalysisPlan:
    """Sample the incomplete backend, plan refinements and choose the design."""
    backend = backend or IbpBackend()
    x = np.asarray(x, dtype=np.float64)
    v = x.size
    label = int(net.classify(x))
    max_k = min(cfg.max_k, v)
    stats = sample_kstats(
        net, x, cfg.t, backend, max_k=max_k, n_samples=cfg.n_samples, n_fail=cfg.n_fail,
        reduced_n=cfg.reduced_samples, workers=cfg.workers, seed=cfg.seed, label=label,
    )
    t_complete = 0.0
    if complete is not None:
        t_complete = estimate_t_complete(
            net, x, cfg.t, complete, n=cfg.t_complete_samples, seed=cfg.seed, label=label
        )
    db = ensure_refinement_db(cfg.t, max_k, db, cfg.cap)
    db.preload(cfg.t, max_k)
    plan = refine_plan(stats, db, t_complete, max_k=max_k)
    scored = score_candidates(v, cfg.t, stats, plan, cfg.seed, cfg.max_k, cfg.eps, cfg.min_k)
    cand, sel, scored = choose_design(v, cfg.t, stats, plan, cfg.seed, scored=scored)
    log.info("chose PG(%d, %d) for v=%d, t=%d", cand.m, cand.q, v, cfg.t)
    return AnalysisPlan(stats, plan, cand.params, sel, tuple(scored), db, label)


def refine(S: Block, plan: RefinementPlan, db: CoverDB) -> list[Block]:
    """Blocks of the planned smaller covering of ``S``; together they cover every t-subset of ``S``."""
    k = len(S)
    if k <= plan.t:
        raise ValueError(f"cannot refine a block of size {k} <= t={plan.t}")
    if k not in plan.f_R:
        raise KeyError(f"no refinement size planned for blocks of size {k}")
    return rename_to(db.get(k, plan.f_R[k], plan.t), S)


class _Shared:
    """State visible to every worker."""

    def __init__(self, cfg: RunConfig, virtual: bool):
        self.cfg = cfg
        self.virtual = virtual
        self.lock = threading.Lock()
        self.stop = threading.Event()
        self.submitted: set[Block] = set()
        self.order = 0
        self.witness: tuple[int, np.ndarray] | None = None
        self.unresolved = 0
        self.timed_out = False
        self.stats = RunStats()
        self.started = time.perf_counter()

    def submit(self, S: Block) -> int | None:
        """Claim a t-block for the complete backend; ``None`` if already claimed."""
        with self.lock:
            if S in self.submitted:
                return None
            self.submitted.add(S)
            self.order += 1
            return self.order

    def charge(self, secs: float) -> None:
        with self.lock:
            self.stats.virtual_time += secs

    def out_of_time(self) -> bool:
        if self.cfg.timeout is None:
            return False
        spent = self.stats.virtual_time if self.virtual else time.perf_counter() - self.started
        if spent > self.cfg.timeout:
            self.timed_out = True
            self.stop.set()
        return self.timed_out

    def found(self, order: int, witness: np.ndarray) -> None:
        with self.lock:
            if self.witness is None or order < self.witness[0]:
                self.witness = (order, witness)
        self.stop.set()


def _worker(
    w: int,
    net: Network,
    x: np.ndarray,
    ap: AnalysisPlan,
    shared: _Shared,
    backend,
    complete,
    on_verified: Callable[[Block, str], None] | None,
) -> Iterator[None]:
    """One worker's loop; yields after every backend call so a scheduler can interleave."""
    t, label, stats = ap.plan.t, ap.label, shared.stats
    stream = cvd_stream(ap.params, ap.selection, w, shared.cfg.workers)
    stack: list[Block] = []
    while not shared.stop.is_set():
        if not stack:
            S = next(stream, None)
            if S is None:
                return
            with shared.lock:
                stats.streamed_blocks += 1
            if len(S) < t:
                with shared.lock:
                    stats.skipped_small += 1
                continue
            stack.append(S)
        if shared.out_of_time():
            return
        S = stack.pop()
        verdict = backend(net, make_neighborhood(x, S), label, w)
        with shared.lock:
            stats.note_call(len(S))
        shared.charge(verdict.cost)
        yield
        if verdict.verified:
            if on_verified:
                on_verified(S, "incomplete")
            continue
        if len(S) == t:
            order = shared.submit(S)
            if order is None or complete is None:
                if complete is None and order is not None:
                    with shared.lock:
                        shared.unresolved += 1
                continue
            if shared.out_of_time():
                return
            cv = complete(net, make_neighborhood(x, S), label)
            with shared.lock:
                stats.complete_calls += 1
            shared.charge(cv.cost)
            yield
            if cv.status is Status.FALSIFIED:
                shared.found(order, cv.witness)
                return
            if cv.verified:
                if on_verified:
                    on_verified(S, "complete")
            else:
                with shared.lock:
                    shared.unresolved += 1
            continue
        blocks = refine(S, ap.plan, ap.db)
        with shared.lock:
            stats.refinements += 1
        stack.extend(reversed(blocks))


def _round_robin(gens: list[Iterator[None]]) -> None:
    active = list(gens)
    while active:
        still = []
        for g in active:
            try:
                next(g)
            except StopIteration:
                continue
            still.append(g)
        active = still


def _threads(gens: list[Iterator[None]]) -> None:
    errors = []

    def drain(g):
        try:
            for _ in g:
                pass
        except BaseException as exc:  # surfaced after join
            errors.append(exc)

    threads = [threading.Thread(target=drain, args=(g,)) for g in gens]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]


def verify_ball(
    net: Network,
    x: np.ndarray,
    cfg: RunConfig,
    backend=None,
    complete="default",
    db: CoverDB | None = None,
    plan: AnalysisPlan | None = None,
    on_verified: Callable[[Block, str], None] | None = None,
) -> tuple[Verdict, RunStats]:
    """Decide whether every perturbation of at most ``t`` pixels keeps the label.

    ``complete`` defaults to the exact affine backend when the network has no
    ReLUs and to none otherwise; pass ``None`` to force the incomplete-only
    mode, in which failed t-blocks end as Unknown.
    """
    backend = backend or IbpBackend()
    if complete == "default":
        complete = AffineBackend() if net.is_affine else None
    x = np.asarray(x, dtype=np.float64)
    if plan is None:
        plan = make_plan(net, x, cfg, backend, complete, db)
    virtual = bool(getattr(backend, "virtual", False))
    shared = _Shared(cfg, virtual)
    gens = [
        _worker(w, net, x, plan, shared, backend, complete, on_verified) for w in range(cfg.workers)
    ]
    (_threads if cfg.scheduler == "threads" else _round_robin)(gens)
    stats = shared.stats
    stats.wall_time = time.perf_counter() - shared.started
    if shared.witness is not None:
        verdict = Verdict(Outcome.NON_ROBUST, shared.witness[1])
    elif shared.timed_out or shared.unresolved:
        verdict = Verdict(Outcome.UNKNOWN, unresolved=shared.unresolved, timed_out=shared.timed_out)
    else:
        verdict = Verdict(Outcome.ROBUST)
    stats.verdict = verdict.status.value
    return verdict, stats
