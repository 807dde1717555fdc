"""Projective-geometry coverings and their partially-induced streams.

The points of PG(m, q) are the ``v' = (q^(m+1) - 1) / (q - 1)`` one-dimensional
subspaces of ``GF(q)^(m+1)``.  Each point is represented by its canonical vector
(first nonzero coordinate equal to 1) and numbered 1..v' in this order: vectors
whose leading one is at coordinate 0 first, then coordinate 1, and so on, with
the trailing coordinates enumerated lexicographically within each group.

A ``(t-1)``-flat is the set of points in the null space of a full-rank
``(m-t+1) x (m+1)`` matrix; using RREF matrices makes every flat appear exactly
once.  The flats form a covering ``C(v', k', t)`` with ``k' = (q^t - 1)/(q - 1)``
which is also a BIBD.

:func:`cvd_stream` generates the blocks of this covering restricted to an
ordered selection ``L`` of ``v`` points, block by block, without ever holding
more than one batch of blocks in memory.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .gf import (
    FieldMatrix,
    PrimeField,
    gaussian_binomial,
    matmul_mod,
    pivot_patterns,
    rref_batch,
    rref_enumerate,
)

__all__ = [
    "Block",
    "PgParams",
    "InducedSelection",
    "pg_points",
    "point_vectors",
    "pg_block",
    "pg_covering",
    "cvd_stream",
    "cvd_block_sizes",
    "bibd_parameters",
]

Block = tuple[int, ...]

# Rows of R = M @ P_L computed per batch; keeps peak memory flat.
_BATCH_CELLS = 1 << 21
# Largest q^(m+1) for which a direct vector-code -> position table is built.
_RAW_TABLE_LIMIT = 1 << 22


@dataclass(frozen=True)
class PgParams:
    """Parameters ``(q, m, t)`` of a PG covering; ``q`` prime, ``m >= t >= 2``."""

    q: int
    m: int
    t: int

    def __post_init__(self):
        PrimeField(self.q)  # validates primality
        if self.t < 2:
            raise ValueError(f"t must be >= 2, got {self.t}")
        if self.m < self.t:
            raise ValueError(f"m must be >= t, got m={self.m}, t={self.t}")

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.q)

    @property
    def n_points(self) -> int:
        """v', the number of points of PG(m, q)."""
        return (self.q ** (self.m + 1) - 1) // (self.q - 1)

    @property
    def block_size(self) -> int:
        """k', the number of points on a (t-1)-flat."""
        return (self.q**self.t - 1) // (self.q - 1)

    @property
    def n_blocks(self) -> int:
        """b, the number of (t-1)-flats."""
        return gaussian_binomial(self.m + 1, self.t, self.q)

    @property
    def equations(self) -> int:
        """Rows of each defining matrix, ``m - t + 1``."""
        return self.m - self.t + 1


@dataclass(frozen=True)
class InducedSelection:
    """An ordered choice ``L`` of distinct point indices from ``[1, v']``."""

    L: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        L = tuple(int(x) for x in self.L)
        if len(set(L)) != len(L):
            raise ValueError("selection contains repeated indices")
        if L and min(L) < 1:
            raise ValueError("selection indices are 1-based")
        object.__setattr__(self, "L", L)

    @property
    def v(self) -> int:
        return len(self.L)

    @classmethod
    def draw(cls, n_points: int, v: int, seed: int | None = None) -> "InducedSelection":
        """Uniformly random ordered ``v``-subset of ``[1, n_points]``."""
        if not 1 <= v <= n_points:
            raise ValueError(f"need 1 <= v <= v'={n_points}, got v={v}")
        rng = random.Random(seed)
        return cls(tuple(x + 1 for x in rng.sample(range(n_points), v)), seed)

    def digest(self) -> str:
        """Short stable fingerprint of ``L``."""
        return hashlib.sha256(",".join(map(str, self.L)).encode()).hexdigest()[:16]

    @classmethod
    def identity(cls, n_points: int) -> "InducedSelection":
        return cls(tuple(range(1, n_points + 1)))

    def check(self, params: PgParams) -> None:
        if self.L and max(self.L) > params.n_points:
            raise ValueError(f"selection index {max(self.L)} exceeds v'={params.n_points}")


def _canonical_vectors(q: int, m: int, idx: np.ndarray) -> np.ndarray:
    n_points = (q ** (m + 1) - 1) // (q - 1)
    if idx.size and (idx.min() < 0 or idx.max() >= n_points):
        raise IndexError("point index out of range")
    group_sizes = [q ** (m - d) for d in range(m + 1)]
    starts = np.concatenate([[0], np.cumsum(group_sizes)])
    lead = np.searchsorted(starts, idx, side="right") - 1
    local = idx - starts[lead]
    out = np.zeros((m + 1, idx.size), dtype=np.int64)
    out[lead, np.arange(idx.size)] = 1
    for d in range(m + 1):
        sel = lead == d
        if not sel.any():
            continue
        rest = local[sel]
        # trailing coordinates d+1..m, most significant first
        for c in range(m, d, -1):
            out[c, sel] = rest % q
            rest //= q
    return out


def point_vectors(params: PgParams, indices: Sequence[int]) -> np.ndarray:
    """Canonical vectors of the given 1-based point indices, as columns.

    Returns an int64 array of shape ``(m + 1, len(indices))``.
    """
    idx = np.asarray(indices, dtype=np.int64).reshape(-1) - 1
    return _canonical_vectors(params.q, params.m, idx)


@lru_cache(maxsize=16)
def _all_points(params: PgParams) -> np.ndarray:
    pts = point_vectors(params, np.arange(1, params.n_points + 1))
    pts.setflags(write=False)
    return pts


def pg_points(params: PgParams) -> FieldMatrix:
    """The ``(m+1) x v'`` matrix whose columns are the canonical points."""
    return FieldMatrix(params.field, _all_points(params))


def pg_block(params: PgParams, j: int) -> Block:
    """The ``j``-th flat as a sorted tuple of 1-based point indices."""
    s = params.equations
    mat = rref_enumerate(s, params.m + 1, params.field, j)
    r = matmul_mod(mat.entries, _all_points(params), params.q)
    return tuple((np.flatnonzero(~r.any(axis=0)) + 1).tolist())


def pg_covering(params: PgParams) -> Iterator[Block]:
    """All blocks of the PG covering over ``[1, v']``, in RREF order."""
    return cvd_stream(params, InducedSelection.identity(params.n_points))


def _index_batches(params: PgParams, worker: int, n_workers: int, batch: int):
    """Yield ``(pattern, local_indices)`` for this worker's share, in increasing j."""
    s, n, q = params.equations, params.m + 1, params.q
    for pat in pivot_patterns(s, n, q):
        if pat.size >= 2**62:
            raise OverflowError("pivot pattern too large for int64 indexing")
        first = (worker - pat.offset) % n_workers
        for lo in range(first, pat.size, batch * n_workers):
            hi = min(pat.size, lo + batch * n_workers)
            yield pat, np.arange(lo, hi, n_workers, dtype=np.int64)


@lru_cache(maxsize=64)
def _flat_coefficients(q: int, t: int) -> np.ndarray:
    """Canonical projective coefficient vectors of GF(q)^t, shape ``(t, k')``."""
    k = (q**t - 1) // (q - 1)
    return _canonical_vectors(q, t - 1, np.arange(k, dtype=np.int64))


def _choose_method(params: PgParams, v: int) -> str:
    # column test costs ~ s*v per block, flat enumeration ~ 4*k'
    return "flats" if 4 * params.block_size < params.equations * v else "columns"


def _column_batches(params, sel, worker, n_workers):
    s, n, q = params.equations, params.m + 1, params.q
    points = point_vectors(params, sel.L)  # (n, v)
    v = points.shape[1]
    batch = max(1, _BATCH_CELLS // max(1, s * v))
    for pat, local in _index_batches(params, worker, n_workers, batch):
        mats = rref_batch(pat, local, s, n, q)
        r = matmul_mod(mats.reshape(-1, n), points, q).reshape(len(local), s, v)
        yield ~r.any(axis=1)


def _raw_position_table(params: PgParams, position: np.ndarray) -> np.ndarray:
    """Map every vector's base-q code (coordinate 0 most significant) to its L-position.

    Scalar multiples share a point, so every nonzero code resolves; the zero
    vector maps to -1.
    """
    q, m = params.q, params.m
    codes = np.arange(q ** (m + 1), dtype=np.int64)
    digits = np.stack([(codes // q ** (m - c)) % q for c in range(m + 1)])
    lead = np.argmax(digits != 0, axis=0)
    lead_val = digits[lead, codes]
    table = np.full(codes.size, -1, dtype=np.int64)
    nz = lead_val != 0
    inverse = np.array([0] + [pow(a, -1, q) for a in range(1, q)], dtype=np.int64)
    canon = digits[:, nz] * inverse[lead_val[nz]] % q
    lead = lead[nz]
    weights = q ** np.arange(m, -1, -1, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(weights)])
    index = starts[lead] + weights @ canon - weights[lead]
    table[nz] = position[index]
    return table


def _flat_batches(params, sel, worker, n_workers):
    s, n, q, m, t = params.equations, params.m + 1, params.q, params.m, params.t
    kp = params.block_size
    coeffs = _flat_coefficients(q, t)  # (t, k')
    position = np.full(params.n_points, -1, dtype=np.int64)
    position[np.asarray(sel.L, dtype=np.int64) - 1] = np.arange(len(sel.L))
    weights = q ** np.arange(m, -1, -1, dtype=np.int64)  # q^(m-c)
    raw_table = _raw_position_table(params, position) if q**n <= _RAW_TABLE_LIMIT else None
    inverse = np.array([0] + [pow(a, -1, q) for a in range(1, q)], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(weights)])
    batch = max(1, _BATCH_CELLS // (n * kp))
    pivot_cols: dict[tuple[int, ...], list[int]] = {}
    for pat, local in _index_batches(params, worker, n_workers, batch):
        mats = rref_batch(pat, local, s, n, q)  # (B, s, n)
        nonpiv = pivot_cols.setdefault(
            pat.pivots, [c for c in range(n) if c not in pat.pivots]
        )
        # null-space basis: x_c = 1 for the c-th free column, x_piv[r] = -M[r, c]
        basis = np.zeros((len(local), n, t), dtype=np.int64)
        for i, c in enumerate(nonpiv):
            basis[:, c, i] = 1
            basis[:, list(pat.pivots), i] = (-mats[:, :, c]) % q
        pts = matmul_mod(basis, coeffs, q)  # (B, n, k')
        if raw_table is not None:
            yield raw_table[np.einsum("bnk,n->bk", pts, weights)]
            continue
        lead = np.argmax(pts != 0, axis=1)  # (B, k')
        lead_val = np.take_along_axis(pts, lead[:, None, :], axis=1)[:, 0, :]
        pts = pts * inverse[lead_val][:, None, :] % q
        index = starts[lead] + np.einsum("bnk,n->bk", pts, weights) - weights[lead]
        yield position[index]


def _batches(params, sel, worker, n_workers, method):
    if n_workers < 1 or not 0 <= worker < n_workers:
        raise ValueError(f"need 0 <= worker < n_workers, got {worker}, {n_workers}")
    sel.check(params)
    if method == "auto":
        method = _choose_method(params, sel.v)
    if method == "columns":
        return "mask", _column_batches(params, sel, worker, n_workers)
    if method == "flats":
        return "positions", _flat_batches(params, sel, worker, n_workers)
    raise ValueError(f"unknown method {method!r}")


def cvd_stream(
    params: PgParams,
    sel: InducedSelection,
    worker: int = 0,
    n_workers: int = 1,
    method: str = "auto",
) -> Iterator[Block]:
    """Stream this worker's blocks of the partially-induced covering.

    Block ``j`` (for ``j % n_workers == worker``) is the set of 1-based
    positions ``i`` in ``L`` whose point lies on flat ``j``.  Empty and
    duplicate blocks are emitted as-is.

    ``method`` picks how membership is decided: ``"columns"`` multiplies each
    defining matrix against the selected points, ``"flats"`` enumerates the
    points of each flat and looks them up in ``L``; ``"auto"`` takes the
    cheaper one.  Both yield identical streams.
    """
    kind, batches = _batches(params, sel, worker, n_workers, method)
    for chunk in batches:
        if kind == "mask":
            rows, cols = np.nonzero(chunk)
            cols = cols + 1
        else:
            chunk = np.sort(chunk, axis=1)
            rows, cols = np.nonzero(chunk >= 0)
            cols = chunk[rows, cols] + 1
        bounds = np.searchsorted(rows, np.arange(chunk.shape[0] + 1))
        cols = cols.tolist()
        for a, b in zip(bounds[:-1], bounds[1:]):
            yield tuple(cols[a:b])


def cvd_block_sizes(
    params: PgParams,
    sel: InducedSelection,
    worker: int = 0,
    n_workers: int = 1,
    method: str = "auto",
) -> np.ndarray:
    """Sizes of this worker's blocks, in stream order."""
    kind, batches = _batches(params, sel, worker, n_workers, method)
    if kind == "mask":
        parts = [c.sum(axis=1) for c in batches]
    else:
        parts = [(c >= 0).sum(axis=1) for c in batches]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def bibd_parameters(params: PgParams) -> tuple[int, int, int, int, int]:
    """``(v', b, r, k', lambda)`` of the PG covering viewed as a BIBD."""
    q, m, t = params.q, params.m, params.t
    b = gaussian_binomial(m + 1, t, q)
    r = gaussian_binomial(m, t - 1, q)
    lam = gaussian_binomial(m - 1, t - 2, q)
    vp, kp = params.n_points, params.block_size
    assert r * vp == b * kp
    assert lam * (vp - 1) == r * (kp - 1)
    return vp, b, r, kp, lam
