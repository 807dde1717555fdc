"""Covering designs C(v, k, t) for refinement, their builders, and an on-disk store.

Coverings are stored one per file under ``<root>/t{t}/C_{v}_{k}_{t}.txt``::

    c v k t b
    i_1 i_2 ... i_k     (b lines, sorted 1-based indices)

Blocks are held in memory as a ``(b, k)`` integer array.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .design import schonheim_bound
from .gf import is_prime
from .pg import InducedSelection, PgParams, pg_covering

__all__ = [
    "CAP",
    "CoveringFile",
    "CoveringNotFound",
    "CoverDB",
    "CoveringBuilder",
    "uncovered_subsets",
    "is_covering",
    "sample_uncovered",
    "greedy_cover",
    "grouping_cover",
    "pg_cover",
    "induce_cover",
    "rename_to",
    "parse_covering",
]

log = logging.getLogger(__name__)

CAP = 500_000
# greedy_cover scans every k-subset against every t-subset it contains
GREEDY_WORK_LIMIT = 400_000
EXHAUSTIVE_CHECK_MAX_V = 40


class CoveringNotFound(KeyError):
    """Requested (v, k, t) is not in the database."""


@dataclass(frozen=True, eq=False)
class CoveringFile:
    v: int
    k: int
    t: int
    array: np.ndarray  # (b, k), sorted rows, 1-based

    def __post_init__(self):
        a = np.asarray(self.array, dtype=np.int32).reshape(-1, self.k)
        if not 1 <= self.t <= self.k <= self.v:
            raise ValueError(f"bad covering parameters ({self.v}, {self.k}, {self.t})")
        if a.size and (a.min() < 1 or a.max() > self.v):
            raise ValueError("block index outside [1, v]")
        a = np.sort(a, axis=1)
        if a.shape[1] > 1 and (np.diff(a, axis=1) == 0).any():
            raise ValueError("block with repeated index")
        a.setflags(write=False)
        object.__setattr__(self, "array", a)

    @classmethod
    def from_blocks(cls, v: int, k: int, t: int, blocks: Iterable[Sequence[int]]) -> "CoveringFile":
        rows = [sorted(b) for b in blocks]
        if any(len(r) != k for r in rows):
            raise ValueError(f"every block must have exactly {k} elements")
        return cls(v, k, t, np.array(rows, dtype=np.int32).reshape(-1, k))

    @property
    def b(self) -> int:
        return self.array.shape[0]

    def __len__(self):
        return self.b

    @property
    def blocks(self) -> list[tuple[int, ...]]:
        return [tuple(r) for r in self.array.tolist()]

    def __eq__(self, other):
        if not isinstance(other, CoveringFile):
            return NotImplemented
        return (self.v, self.k, self.t) == (other.v, other.k, other.t) and np.array_equal(
            self.array, other.array
        )

    def to_text(self) -> str:
        lines = [f"c {self.v} {self.k} {self.t} {self.b}"]
        lines.extend(" ".join(map(str, r)) for r in self.array.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CoveringFile":
        lines = text.splitlines()
        head = lines[0].split()
        if len(head) != 5 or head[0] != "c":
            raise ValueError(f"bad covering header: {lines[0]!r}")
        v, k, t, b = map(int, head[1:])
        body = [ln for ln in lines[1:] if ln.strip()]
        if len(body) != b:
            raise ValueError(f"header says {b} blocks, found {len(body)}")
        arr = np.array([ln.split() for ln in body], dtype=np.int32).reshape(b, k)
        return cls(v, k, t, arr)

    def write(self, path: str | os.PathLike) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path: str | os.PathLike) -> "CoveringFile":
        return cls.from_text(Path(path).read_text())


# --- coverage checks -------------------------------------------------------


@lru_cache(maxsize=None)
def _binom_table(n: int, t: int) -> np.ndarray:
    return np.array([[math.comb(i, j) for j in range(t + 1)] for i in range(n + 1)], dtype=np.int64)


@lru_cache(maxsize=256)
def _subset_patterns(k: int, t: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(k), t)), dtype=np.int64).reshape(-1, t)


def _colex_rank(subsets: np.ndarray, n: int) -> np.ndarray:
    """Colex rank of sorted 0-based t-subsets (rows) of ``[0, n)``."""
    t = subsets.shape[1]
    table = _binom_table(n, t)
    return sum(table[subsets[:, i], i + 1] for i in range(t))


def uncovered_subsets(blocks: np.ndarray | Sequence[Sequence[int]], v: int, t: int) -> int:
    """Number of t-subsets of ``[1, v]`` not contained in any block (exhaustive)."""
    seen = np.zeros(math.comb(v, t), dtype=bool)
    by_size: dict[int, list] = {}
    if isinstance(blocks, np.ndarray):
        by_size[blocks.shape[1]] = [blocks]
    else:
        for b in blocks:
            by_size.setdefault(len(b), []).append(sorted(b))
    for k, group in by_size.items():
        if k < t:
            continue
        arr = np.concatenate([np.asarray(g, dtype=np.int64).reshape(-1, k) for g in group]) - 1
        pat = _subset_patterns(k, t)
        step = max(1, 2_000_000 // max(1, pat.size))
        for lo in range(0, arr.shape[0], step):
            sub = arr[lo : lo + step][:, pat].reshape(-1, t)
            seen[_colex_rank(sub, v)] = True
    return int((~seen).sum())


def sample_uncovered(
    blocks: np.ndarray | Sequence[Sequence[int]],
    v: int,
    t: int,
    n_samples: int,
    seed: int | None = 0,
) -> int:
    """Count how many of ``n_samples`` random t-subsets no block contains."""
    if isinstance(blocks, np.ndarray):
        rows = list(blocks)
    else:
        rows = [np.asarray(b, dtype=np.int64) for b in blocks]
    # per point, a packed bitset of the blocks containing it
    incidence = np.zeros((v, len(rows)), dtype=bool)
    for j, r in enumerate(rows):
        incidence[np.asarray(r) - 1, j] = True
    packed = np.packbits(incidence, axis=1)
    rng = np.random.default_rng(seed)
    step = max(1, 4_000_000 // max(1, t * packed.shape[1]))
    missed = 0
    for lo in range(0, n_samples, step):
        n = min(step, n_samples - lo)
        picks = np.argsort(rng.random((n, v)), axis=1)[:, :t]
        common = np.bitwise_and.reduce(packed[picks], axis=1)
        missed += int((~common.any(axis=1)).sum())
    return missed


def is_covering(cover: CoveringFile, n_samples: int = 100_000, seed: int | None = 0) -> bool:
    """Exhaustive check for ``v <= 40``, random t-subset sampling above."""
    if cover.v <= EXHAUSTIVE_CHECK_MAX_V:
        return uncovered_subsets(cover.array, cover.v, cover.t) == 0
    return sample_uncovered(cover.array, cover.v, cover.t, n_samples, seed) == 0


# --- builders --------------------------------------------------------------


def greedy_cover(v: int, k: int, t: int, cap: int = CAP) -> CoveringFile:
    """Greedy covering: repeatedly take the k-subset covering most uncovered t-subsets.

    Ties go to the lexicographically smallest k-subset.  Only feasible for
    small ``C(v, k) * C(k, t)``.
    """
    if not 1 <= t <= k <= v:
        raise ValueError(f"need 1 <= t <= k <= v, got ({v}, {k}, {t})")
    if k == v:
        return CoveringFile(v, k, t, np.arange(1, v + 1, dtype=np.int32)[None, :])
    n_cand, per = math.comb(v, k), math.comb(k, t)
    if n_cand * per > GREEDY_WORK_LIMIT:
        raise ValueError(f"greedy search space too large for ({v}, {k}, {t})")
    cands = np.array(list(itertools.combinations(range(v), k)), dtype=np.int64)
    ranks = _colex_rank(cands[:, _subset_patterns(k, t)].reshape(-1, t), v).reshape(n_cand, per)
    # candidates containing each t-subset, so gains can be updated incrementally
    flat = ranks.ravel()
    order = np.argsort(flat, kind="stable")
    owners = order // per
    starts = np.searchsorted(flat[order], np.arange(math.comb(v, t) + 1))
    gains = np.full(n_cand, per, dtype=np.int64)
    uncovered = np.ones(math.comb(v, t), dtype=bool)
    chosen = []
    while gains.max() > 0:
        best = int(np.argmax(gains))
        chosen.append(best)
        if len(chosen) > cap:
            raise ValueError(f"greedy covering for ({v}, {k}, {t}) exceeds cap {cap}")
        fresh = ranks[best][uncovered[ranks[best]]]
        uncovered[fresh] = False
        hit = np.concatenate([owners[starts[r] : starts[r + 1]] for r in fresh])
        gains -= np.bincount(hit, minlength=n_cand)
    return CoveringFile(v, k, t, cands[chosen] + 1)


def _rows_mask(rows: Iterable[np.ndarray], v: int) -> np.ndarray:
    rows = list(rows)
    mask = np.zeros((len(rows), v), dtype=bool)
    for i, r in enumerate(rows):
        mask[i, np.asarray(r, dtype=np.int64) - 1] = True
    return mask


def _pad_mask(mask: np.ndarray, k: int) -> np.ndarray:
    """Rows of a ``(n, v)`` membership mask, each topped up to ``k`` elements
    with its smallest absent indices, as a sorted ``(n, k)`` index array."""
    counts = mask.sum(axis=1)
    if (counts > k).any():
        raise ValueError("row larger than the block size")
    absent_rank = np.cumsum(~mask, axis=1)
    keep = mask | (~mask & (absent_rank <= (k - counts)[:, None]))
    return (np.nonzero(keep)[1].reshape(-1, k) + 1).astype(np.int32)


def _pad(rows: list[np.ndarray], v: int, k: int) -> np.ndarray:
    """Extend each row to ``k`` elements with the smallest absent indices."""
    if not rows:
        return np.empty((0, k), dtype=np.int32)
    return _pad_mask(_rows_mask(rows, v), k)


def _balanced_parts(v: int, g: int) -> list[np.ndarray]:
    base, extra = divmod(v, g)
    parts, start = [], 1
    for i in range(g):
        size = base + (i < extra)
        parts.append(np.arange(start, start + size, dtype=np.int32))
        start += size
    return parts


def _grouping_shape(v: int, k: int, g: int) -> int:
    """How many of the largest balanced parts of ``[v]`` into ``g`` fit in ``k``."""
    base, extra = divmod(v, g)
    sizes = [base + 1] * extra + [base] * (g - extra)
    total = h = 0
    for s in sizes:
        if total + s > k:
            break
        total += s
        h += 1
    return h


def grouping_cover(v: int, k: int, t: int, g: int, group_cover: CoveringFile) -> CoveringFile:
    """Cover ``[v]`` by unions of groups.

    Splits ``[v]`` into ``g`` balanced groups; every t-subset meets at most ``t``
    groups, so unions of the group sets in a ``C(g, h, t)`` covering, padded to
    ``k``, cover every t-subset of ``[v]``.
    """
    h = group_cover.k
    if group_cover.v != g or group_cover.t != t or _grouping_shape(v, k, g) < h:
        raise ValueError("group covering does not fit")
    parts = _balanced_parts(v, g)
    part_mask = _rows_mask(parts, v)
    mask = part_mask[group_cover.array - 1].any(axis=1)
    return CoveringFile(v, k, t, _dedupe(_pad_mask(mask, k)))


def _dedupe(a: np.ndarray) -> np.ndarray:
    return np.unique(a, axis=0) if len(a) > 1 else a


@lru_cache(maxsize=16)
def pg_cover(q: int, m: int, t: int) -> CoveringFile:
    params = PgParams(q, m, t)
    return CoveringFile.from_blocks(params.n_points, params.block_size, t, pg_covering(params))


def rename_to(cover: CoveringFile, S: Sequence[int]) -> list[tuple[int, ...]]:
    """Map index ``i`` of every block to the ``i``-th smallest element of ``S``."""
    s = np.sort(np.asarray(S, dtype=np.int64))
    if len(s) != cover.v:
        raise ValueError(f"|S| = {len(s)} but covering is over {cover.v} points")
    return [tuple(r) for r in s[cover.array - 1].tolist()]


def induce_cover(
    base: CoveringFile,
    v: int,
    k: int,
    seed: int | None = 0,
    expand: Callable[[int, int, int], CoveringFile] | None = None,
) -> CoveringFile:
    """Induce a ``C(v', k', t)`` covering down to ``C(v, k, t)``.

    Keeps a random ``v``-subset ``L`` of the points (seeded), pads short blocks
    with the smallest unused positions and splits long blocks with
    ``expand(|B|, k, t)`` (default :func:`greedy_cover`).  Points are renamed
    to their positions in ``L``.
    """
    if not (base.t <= k <= base.k and k <= v <= base.v):
        raise ValueError(f"cannot induce ({base.v}, {base.k}) to ({v}, {k})")
    expand = expand or greedy_cover
    t = base.t
    sel = InducedSelection.draw(base.v, v, seed)
    position = np.zeros(base.v + 1, dtype=np.int64)
    position[list(sel.L)] = np.arange(1, v + 1)
    kept = position[base.array]
    counts = (kept > 0).sum(axis=1)
    # blocks left with fewer than t points cover no t-subset of L
    kept, counts = kept[counts >= t], counts[counts >= t]
    small = kept[counts <= k]
    mask = np.zeros((len(small), v + 1), dtype=bool)
    mask[np.arange(len(small))[:, None], small] = True
    parts = [_pad_mask(mask[:, 1:], k)]
    for row in kept[counts > k]:
        members = np.sort(row[row > 0])
        parts.append(members[expand(len(members), k, t).array - 1].astype(np.int32))
    return CoveringFile(v, k, t, _dedupe(np.vstack(parts)))


def parse_covering(text: str, t: int | None = None, v: int | None = None) -> CoveringFile:
    """Read a covering in database format, or a bare block listing (one block per line)."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if lines and lines[0].split()[0] == "c":
        return CoveringFile.from_text("\n".join(lines))
    if t is None:
        raise ValueError("t is required for a headerless block listing")
    rows = [list(map(int, ln.split())) for ln in lines]
    ks = {len(r) for r in rows}
    if len(ks) != 1:
        raise ValueError("blocks of different sizes")
    v = v or max(max(r) for r in rows)
    return CoveringFile.from_blocks(v, ks.pop(), t, rows)


# --- database --------------------------------------------------------------


def _pg_shapes(t: int, max_v: int):
    """PG parameter triples with ``v' <= max_v``."""
    q = 2
    while (q ** (t + 1) - 1) // (q - 1) <= max_v:
        if is_prime(q):
            m = t
            while (q ** (m + 1) - 1) // (q - 1) <= max_v:
                yield PgParams(q, m, t)
                m += 1
        q += 1


def _expected_survivors(p: PgParams, v: int) -> float:
    """Expected number of PG blocks keeping at least ``t`` of ``v`` random points."""
    vp, kp, t = p.n_points, p.block_size, p.t
    total = math.comb(vp, v)
    hit = sum(math.comb(kp, j) * math.comb(vp - kp, v - j) for j in range(t, min(kp, v) + 1))
    return p.n_blocks * hit / total


class CoveringBuilder:
    """Builds coverings for every ``(v, k, t')`` with ``t' <= t``, smallest first.

    Candidates per triple: all t-subsets (``k == t``), the PG covering itself,
    PG coverings induced down, greedy (small cases), unions of groups over a
    smaller covering, and the recursion
    ``C(v, k, t) <- C(v-1, k, t) + {B + {v} : B in C(v-1, k-1, t-1)}``.
    The smallest wins; ties go to the earlier builder in that list.
    """

    PREFERENCE = ("subsets", "pg", "induced", "greedy", "grouping", "recursion")

    def __init__(self, cap: int = CAP, seed: int = 0, pg_factor: int = 4):
        self.cap = cap
        self.seed = seed
        self.pg_factor = pg_factor
        self._memo: dict[tuple[int, int, int], CoveringFile | None] = {}
        self.chosen: dict[tuple[int, int, int], str] = {}

    def size(self, v: int, k: int, t: int) -> int | None:
        c = self.get(v, k, t)
        return None if c is None else c.b

    def get(self, v: int, k: int, t: int) -> CoveringFile | None:
        key = (v, k, t)
        if key not in self._memo:
            self._memo[key] = self._build(v, k, t)
        return self._memo[key]

    def warm(self, t: int, max_v: int) -> None:
        """Build bottom-up so recursive lookups stay shallow."""
        for tt in range(1, t + 1):
            for v in range(tt, max_v + 1):
                for k in range(tt, v + 1):
                    self.get(v, k, tt)

    def _build(self, v, k, t) -> CoveringFile | None:
        if k == v:
            return CoveringFile(v, k, t, np.arange(1, v + 1, dtype=np.int32)[None, :])
        if t == 1:
            n = -(-v // k)
            rows = [np.arange(1 + i * k, min(v, (i + 1) * k) + 1) for i in range(n)]
            return CoveringFile(v, k, t, _pad(rows, v, k))
        options: list[tuple[int, int, str, Callable[[], CoveringFile]]] = []

        def offer(name, size, make):
            if size is not None and size <= self.cap:
                options.append((size, self.PREFERENCE.index(name), name, make))

        def best_size():
            return min((o[0] for o in options), default=self.cap)

        if k == t:
            offer("subsets", math.comb(v, t), lambda: self._all_subsets(v, t))
        for g in range(t + 1, v):
            h = _grouping_shape(v, k, g)
            if t <= h < g:
                sub = self.get(g, h, t)
                if sub is not None:
                    offer("grouping", sub.b, lambda g=g, sub=sub: grouping_cover(v, k, t, g, sub))
        a, b = self.get(v - 1, k, t), self.get(v - 1, k - 1, t - 1)
        if a is not None and b is not None:
            offer("recursion", a.b + b.b, lambda a=a, b=b: self._recursion(v, k, t, a, b))
        for p in _pg_shapes(t, self.pg_factor * v):
            if p.n_blocks > self.cap or p.n_points < v or p.block_size < k:
                continue
            if (p.n_points, p.block_size) == (v, k):
                offer("pg", p.n_blocks, lambda p=p: pg_cover(p.q, p.m, p.t))
            elif _expected_survivors(p, v) <= best_size():
                try:
                    made = self._induced(p, v, k, t)
                except ValueError:
                    continue
                offer("induced", made.b, lambda made=made: made)
        if (
            math.comb(v, k) * math.comb(k, t) <= GREEDY_WORK_LIMIT
            and schonheim_bound(v, k, t) < best_size()
        ):
            try:
                # a greedy run that grows past the best known size cannot win
                made = greedy_cover(v, k, t, cap=best_size() - 1)
            except ValueError:
                pass
            else:
                offer("greedy", made.b, lambda made=made: made)
        if not options:
            return None
        size, _, name, make = min(options, key=lambda o: (o[0], o[1]))
        self.chosen[(v, k, t)] = name
        return make()

    @staticmethod
    def _all_subsets(v, t):
        return CoveringFile(v, t, t, np.array(list(itertools.combinations(range(1, v + 1), t))))

    @staticmethod
    def _recursion(v, k, t, a: CoveringFile, b: CoveringFile) -> CoveringFile:
        extended = np.hstack([b.array, np.full((b.b, 1), v, dtype=np.int32)])
        return CoveringFile(v, k, t, _dedupe(np.vstack([a.array, extended])))

    def _induced(self, p: PgParams, v, k, t) -> CoveringFile | None:
        def expand(n, kk, tt):
            c = self.get(n, kk, tt) if n < v else None
            if c is None:
                raise ValueError("no covering to expand an oversized block")
            return c

        base = pg_cover(p.q, p.m, p.t)
        seed = hash((self.seed, v, k, t, p.q, p.m)) & 0xFFFFFFFF
        return induce_cover(base, v, k, seed=seed, expand=expand)


class CoverDB:
    """Coverings keyed by ``(v, k, t)``; optionally backed by a directory.

    Lookups go through an in-memory cache.  Fill the cache before sharing the
    database between workers; after that it is only read.
    """

    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root) if root is not None else None
        self._cache: dict[tuple[int, int, int], CoveringFile] = {}
        self._sizes: dict[tuple[int, int, int], int] = {}

    @classmethod
    def default(cls) -> "CoverDB":
        return cls(os.environ.get("COVERD_DB", "db"))

    def path_for(self, v: int, k: int, t: int) -> Path:
        if self.root is None:
            raise ValueError("in-memory database has no paths")
        return self.root / f"t{t}" / f"C_{v}_{k}_{t}.txt"

    def put(self, cover: CoveringFile, write: bool = True) -> None:
        key = (cover.v, cover.k, cover.t)
        self._cache[key] = cover
        self._sizes[key] = cover.b
        if write and self.root is not None:
            cover.write(self.path_for(*key))

    def __contains__(self, key) -> bool:
        return self.size(*key) is not None

    def get(self, v: int, k: int, t: int) -> CoveringFile:
        key = (v, k, t)
        if key in self._cache:
            return self._cache[key]
        if self.root is not None:
            path = self.path_for(v, k, t)
            if path.exists():
                cover = CoveringFile.read(path)
                if (cover.v, cover.k, cover.t) != key:
                    raise ValueError(f"{path} holds ({cover.v}, {cover.k}, {cover.t})")
                self._cache[key] = cover
                self._sizes[key] = cover.b
                return cover
        raise CoveringNotFound(key)

    def size(self, v: int, k: int, t: int) -> int | None:
        """Number of blocks, reading only the header; ``None`` when absent."""
        key = (v, k, t)
        if key in self._sizes:
            return self._sizes[key]
        if self.root is not None:
            path = self.path_for(v, k, t)
            if path.exists():
                with open(path) as fh:
                    head = fh.readline().split()
                self._sizes[key] = int(head[4])
                return self._sizes[key]
        return None

    def keys(self, t: int | None = None) -> list[tuple[int, int, int]]:
        keys = set(self._sizes)
        if self.root is not None and self.root.exists():
            for path in self.root.glob("t*/C_*_*_*.txt"):
                v, k, tt = map(int, path.stem.split("_")[1:])
                keys.add((v, k, tt))
        return sorted(key for key in keys if t is None or key[2] == t)

    def preload(self, t: int, max_v: int) -> None:
        """Pull every stored ``(v, k, t)`` with ``v <= max_v`` into memory."""
        for v, k, tt in self.keys(t):
            if v <= max_v:
                self.get(v, k, tt)

    def build(
        self,
        t: int,
        max_v: int,
        cap: int = CAP,
        verify: bool = True,
        builder: CoveringBuilder | None = None,
        n_samples: int = 100_000,
    ) -> int:
        """Build and store ``C(v, k, t)`` for all ``t <= k < v <= max_v`` within the cap.

        Returns the number of coverings stored.
        """
        builder = builder or CoveringBuilder(cap=cap)
        builder.warm(t, max_v)
        stored = 0
        for v in range(t + 1, max_v + 1):
            for k in range(t, v):
                cover = builder.get(v, k, t)
                if cover is None:
                    log.info("no covering within cap for (%d, %d, %d)", v, k, t)
                    continue
                if verify and not is_covering(cover, n_samples=n_samples, seed=v * 1000 + k):
                    raise AssertionError(f"built an invalid covering for ({v}, {k}, {t})")
                self.put(cover)
                stored += 1
        return stored

    def import_file(self, path: str | os.PathLike, t: int | None = None, verify: bool = True) -> CoveringFile:
        cover = parse_covering(Path(path).read_text(), t=t)
        if verify and not is_covering(cover):
            raise ValueError(f"{path} is not a valid C({cover.v}, {cover.k}, {cover.t}) covering")
        self.put(cover)
        return cover


def refinement_sizes(db: CoverDB, t: int, max_k: int) -> dict[tuple[int, int], int]:
    """``{(k, k2): |C(k, k2, t)|}`` for every stored pair with ``t <= k2 < k <= max_k``."""
    out = {}
    for k in range(t + 1, max_k + 1):
        for k2 in range(t, k):
            n = db.size(k, k2, t)
            if n is not None:
                out[(k, k2)] = n
    return out


def build_refinement_db(t: int, max_k: int, cap: int = CAP, verify: bool = False) -> CoverDB:
    """In-memory database holding every refinement covering up to ``max_k``."""
    db = CoverDB()
    db.build(t, max_k, cap=cap, verify=verify)
    return db


__all__ += ["refinement_sizes", "build_refinement_db"]
