"""Arithmetic and linear algebra over prime fields GF(q).

Besides elementwise arithmetic and matrix products, this module enumerates the
full-rank matrices in reduced row echelon form (RREF).  Every such ``s x n``
matrix is the canonical representative of one ``s``-dimensional row space, so
enumerating them enumerates subspaces; their count is the Gaussian binomial
coefficient ``[n choose s]_q``.

The enumeration order is fixed: pivot-column subsets in lexicographic order,
then the free entries of each pivot pattern read as a little-endian mixed-radix
number (the first free position, in row-major order, is the least significant
digit).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "PrimeField",
    "FieldMatrix",
    "is_prime",
    "primes",
    "mat_mul",
    "rank",
    "is_rref",
    "gaussian_binomial",
    "rref_count",
    "rref_enumerate",
    "rref_batch",
    "pivot_patterns",
]

_MAX_Q = 2**31 - 1


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every ``n < 3.3e24``."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes(start: int = 2):
    """Yield the primes ``>= start`` in increasing order (unbounded)."""
    n = max(start, 2)
    while True:
        if is_prime(n):
            yield n
        n += 1


@dataclass(frozen=True)
class PrimeField:
    """The field of integers modulo a prime ``q``."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or not 2 <= self.q <= _MAX_Q:
            raise ValueError(f"field order must be an integer in [2, 2^31-1], got {self.q!r}")
        if not is_prime(int(self.q)):
            raise ValueError(f"field order must be prime, got {self.q}")
        object.__setattr__(self, "q", int(self.q))

    def _check(self, *xs: int) -> None:
        for x in xs:
            if not 0 <= x < self.q:
                raise ValueError(f"{x} is not an element of GF({self.q})")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        return a * b % self.q

    def neg(self, a: int) -> int:
        self._check(a)
        return -a % self.q

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in GF({self.q})")
        return pow(a, -1, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    @property
    def dtype(self) -> np.dtype:
        """Smallest unsigned integer dtype that holds every element."""
        for dt in (np.uint8, np.uint16, np.uint32):
            if self.q - 1 <= np.iinfo(dt).max:
                return np.dtype(dt)
        return np.dtype(np.uint64)


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """An immutable dense matrix over a prime field."""

    field: PrimeField
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2:
            raise ValueError("FieldMatrix entries must be two-dimensional")
        if a.size and (a.min() < 0 or a.max() >= self.field.q):
            raise ValueError(f"entries out of range for GF({self.field.q})")
        a = a.astype(self.field.dtype)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_rows(cls, field: PrimeField, rows) -> "FieldMatrix":
        return cls(field, np.array(rows, dtype=np.int64).reshape(len(rows), -1))

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "FieldMatrix":
        return cls(field, np.eye(n, dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def tolist(self) -> list[list[int]]:
        return self.entries.tolist()

    def __eq__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.field == other.field and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.field, self.shape, self.entries.tobytes()))

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return mat_mul(self, other)

    def __repr__(self):
        return f"FieldMatrix(GF({self.field.q}), {self.tolist()})"


@lru_cache(maxsize=32)
def _residues(q: int, bound: int) -> np.ndarray:
    table = (np.arange(bound + 1, dtype=np.int64) % q).astype(np.int64)
    table.setflags(write=False)
    return table


def matmul_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """``a @ b mod q`` for integer arrays with entries in ``[0, q)``.

    Broadcasts like ``np.matmul``.  Picks the cheapest exact route: float BLAS
    while every partial sum is exactly representable, int64 while it cannot
    overflow, Python integers beyond that.
    """
    inner = a.shape[-1]
    bound = inner * (q - 1) ** 2
    if bound < 2**24:
        out = np.matmul(a.astype(np.float32), b.astype(np.float32)).astype(np.int32)
        if bound <= 2**22:
            return _residues(q, bound)[out]
        return out.astype(np.int64) % q
    if bound < 2**53:
        out = np.matmul(a.astype(np.float64), b.astype(np.float64))
        return out.astype(np.int64) % q
    if bound < 2**63:
        return np.matmul(a.astype(np.int64), b.astype(np.int64)) % q
    out = np.matmul(a.astype(object), b.astype(object)) % q
    return out.astype(np.int64)


def mat_mul(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    if a.field != b.field:
        raise ValueError(f"field mismatch: GF({a.field.q}) vs GF({b.field.q})")
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return FieldMatrix(a.field, matmul_mod(a.entries, b.entries, a.field.q))


def _row_reduce(rows: list[list[int]], q: int) -> tuple[list[list[int]], list[int]]:
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] % q), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = pow(m[r][c], -1, q)
        m[r] = [x * inv % q for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] % q:
                f = m[i][c]
                m[i] = [(x - f * y) % q for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(a: FieldMatrix) -> int:
    """Rank by Gauss-Jordan elimination over GF(q)."""
    return len(_row_reduce(a.tolist(), a.field.q)[1])


def is_rref(a: FieldMatrix) -> bool:
    """True when ``a`` is in reduced row echelon form with no zero rows."""
    rows = a.tolist()
    last = -1
    for i, row in enumerate(rows):
        lead = next((c for c, x in enumerate(row) if x), None)
        if lead is None or lead <= last or row[lead] != 1:
            return False
        if any(rows[k][lead] for k in range(len(rows)) if k != i):
            return False
        last = lead
    return True


def gaussian_binomial(n: int, s: int, q: int) -> int:
    """Number of ``s``-dimensional subspaces of ``GF(q)^n``."""
    if s < 0 or s > n:
        return 0
    num = den = 1
    for i in range(s):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    value, rem = divmod(num, den)
    assert rem == 0, (n, s, q)
    return value


def rref_count(s: int, n: int, field: PrimeField) -> int:
    """Count of full-rank ``s x n`` RREF matrices over ``field``."""
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s}, n={n}")
    return gaussian_binomial(n, s, field.q)


@dataclass(frozen=True)
class PivotPattern:
    """One pivot-column choice: where the ones sit and which entries are free."""

    pivots: tuple[int, ...]
    free: tuple[tuple[int, int], ...]  # (row, col), row-major
    offset: int  # index of the first matrix with this pattern
    size: int  # q ** len(free)


@lru_cache(maxsize=256)
def pivot_patterns(s: int, n: int, q: int) -> tuple[PivotPattern, ...]:
    out = []
    offset = 0
    for piv in itertools.combinations(range(n), s):
        pset = set(piv)
        free = tuple(
            (r, c) for r in range(s) for c in range(piv[r] + 1, n) if c not in pset
        )
        size = q ** len(free)
        out.append(PivotPattern(piv, free, offset, size))
        offset += size
    return tuple(out)


def _locate(patterns, j: int) -> PivotPattern:
    lo, hi = 0, len(patterns)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if patterns[mid].offset <= j:
            lo = mid
        else:
            hi = mid
    return patterns[lo]


def rref_enumerate(s: int, n: int, field: PrimeField, j: int) -> FieldMatrix:
    """The ``j``-th full-rank ``s x n`` RREF matrix in the fixed order."""
    total = rref_count(s, n, field)
    if not 0 <= j < total:
        raise IndexError(f"RREF index {j} out of range [0, {total})")
    pat = _locate(pivot_patterns(s, n, field.q), j)
    m = np.zeros((s, n), dtype=np.int64)
    for r, c in enumerate(pat.pivots):
        m[r, c] = 1
    local = j - pat.offset
    for r, c in pat.free:
        local, m[r, c] = divmod(local, field.q)
    return FieldMatrix(field, m)


def rref_batch(pat: PivotPattern, local: np.ndarray, s: int, n: int, q: int) -> np.ndarray:
    """Materialize the RREF matrices of one pivot pattern at the given local indices.

    Returns an int64 array of shape ``(len(local), s, n)``.
    """
    local = np.asarray(local, dtype=np.int64)
    out = np.zeros((len(local), s, n), dtype=np.int64)
    for r, c in enumerate(pat.pivots):
        out[:, r, c] = 1
    if pat.free:
        rows, cols = zip(*pat.free)
        powers = q ** np.arange(len(pat.free), dtype=np.int64)
        out[:, rows, cols] = (local[:, None] // powers) % q
    return out
