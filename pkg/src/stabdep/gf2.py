"""Bit-packed linear algebra over GF(2).

Vectors are stored as Python integers. Column ``0`` of a vector of length
``m`` is its most significant bit (bit ``m - 1``), so a bitstring written
left to right reads the same as the integer in binary. Row reduction
searches for pivots from column 0 (the MSB) rightwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

MAX_BITS = 64


class GF2Error(ValueError):
    """Base class for GF(2) algebra errors."""


class LengthMismatch(GF2Error):
    pass


class InconsistentSystem(GF2Error):
    pass


class NotInSpan(GF2Error):
    pass


def popcount(x: int) -> int:
    return x.bit_count()


def parity(x: int) -> int:
    return x.bit_count() & 1


@dataclass(frozen=True)
class BitVec:
    """Fixed-length vector over GF(2)."""

    bits: int
    length: int

    def __post_init__(self) -> None:
        if not 0 <= self.length <= MAX_BITS:
            raise GF2Error(f"length {self.length} outside [0, {MAX_BITS}]")
        if not 0 <= self.bits < (1 << self.length):
            raise GF2Error(f"bits {self.bits:#x} do not fit in {self.length} columns")

    @classmethod
    def zeros(cls, length: int) -> BitVec:
        return cls(0, length)

    @classmethod
    def unit(cls, length: int, col: int) -> BitVec:
        return cls(1 << (length - 1 - col), length)

    @classmethod
    def from_str(cls, s: str) -> BitVec:
        s = s.strip()
        return cls(int(s, 2) if s else 0, len(s))

    @classmethod
    def from_list(cls, values: Sequence[int]) -> BitVec:
        bits = 0
        for v in values:
            bits = (bits << 1) | (int(v) & 1)
        return cls(bits, len(values))

    def to_list(self) -> list[int]:
        return [(self.bits >> (self.length - 1 - c)) & 1 for c in range(self.length)]

    def __str__(self) -> str:
        return format(self.bits, f"0{self.length}b") if self.length else ""

    def __getitem__(self, col: int) -> int:
        if not 0 <= col < self.length:
            raise IndexError(col)
        return (self.bits >> (self.length - 1 - col)) & 1

    def __len__(self) -> int:
        return self.length

    def _check(self, other: BitVec) -> None:
        if self.length != other.length:
            raise LengthMismatch(f"length {self.length} != {other.length}")

    def __xor__(self, other: BitVec) -> BitVec:
        self._check(other)
        return BitVec(self.bits ^ other.bits, self.length)

    __add__ = __xor__

    def __and__(self, other: BitVec) -> BitVec:
        self._check(other)
        return BitVec(self.bits & other.bits, self.length)

    def dot(self, other: BitVec) -> int:
        self._check(other)
        return parity(self.bits & other.bits)

    def weight(self) -> int:
        return popcount(self.bits)

    def is_zero(self) -> bool:
        return self.bits == 0


@dataclass(frozen=True)
class BitMatrix:
    """Rectangular matrix over GF(2); each row is an integer of ``ncols`` bits."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self) -> None:
        if not 0 <= self.ncols <= MAX_BITS:
            raise GF2Error(f"ncols {self.ncols} outside [0, {MAX_BITS}]")
        limit = 1 << self.ncols
        for r in self.rows:
            if not 0 <= r < limit:
                raise GF2Error(f"row {r:#x} does not fit in {self.ncols} columns")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], ncols: int | None = None) -> BitMatrix:
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        vecs = [BitVec.from_list(r) for r in rows]
        for v in vecs:
            if v.length != ncols:
                raise LengthMismatch("ragged rows")
        return cls(tuple(v.bits for v in vecs), ncols)

    @classmethod
    def from_bitvecs(cls, vecs: Sequence[BitVec], ncols: int | None = None) -> BitMatrix:
        if ncols is None:
            if not vecs:
                raise GF2Error("ncols required for an empty matrix")
            ncols = vecs[0].length
        for v in vecs:
            if v.length != ncols:
                raise LengthMismatch("ragged rows")
        return cls(tuple(v.bits for v in vecs), ncols)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(tuple(1 << (n - 1 - i) for i in range(n)), n)

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def col_count(self) -> int:
        return self.ncols

    def row(self, i: int) -> BitVec:
        return BitVec(self.rows[i], self.ncols)

    def to_lists(self) -> list[list[int]]:
        return [BitVec(r, self.ncols).to_list() for r in self.rows]

    def transpose(self) -> BitMatrix:
        m = len(self.rows)
        out = []
        for c in range(self.ncols):
            shift = self.ncols - 1 - c
            word = 0
            for r in self.rows:
                word = (word << 1) | ((r >> shift) & 1)
            out.append(word)
        return BitMatrix(tuple(out), m)

    def is_rref(self) -> bool:
        return is_rref(self.rows, self.ncols)


class RowOp(NamedTuple):
    """One elementary row operation.

    ``kind == "swap"`` exchanges rows ``target`` and ``source``;
    ``kind == "add"`` performs ``row[target] ^= row[source]``.
    """

    kind: str
    target: int
    source: int


def leading_col(word: int, ncols: int) -> int:
    """Column index of the leading one, or ``-1`` for the zero row."""
    return ncols - word.bit_length() if word else -1


def is_rref(rows: Sequence[int], ncols: int) -> bool:
    """Reduced row echelon predicate: nonzero rows first, pivots strictly
    increasing, and every pivot column zero outside its pivot row."""
    last = -1
    seen_zero = False
    for i, r in enumerate(rows):
        if r == 0:
            seen_zero = True
            continue
        if seen_zero:
            return False
        col = leading_col(r, ncols)
        if col <= last:
            return False
        last = col
        bit = r.bit_length() - 1
        for j, other in enumerate(rows):
            if j != i and (other >> bit) & 1:
                return False
    return True


def rref_words(rows: Iterable[int], ncols: int) -> tuple[list[int], list[int], list[RowOp]]:
    """Row-reduce integer rows. Returns ``(rows, pivot_cols, ops)``."""
    r = list(rows)
    m = len(r)
    ops: list[RowOp] = []
    pivots: list[int] = []
    prow = 0
    for col in range(ncols):
        if prow == m:
            break
        bit = 1 << (ncols - 1 - col)
        found = -1
        for i in range(prow, m):
            if r[i] & bit:
                found = i
                break
        if found < 0:
            continue
        if found != prow:
            r[prow], r[found] = r[found], r[prow]
            ops.append(RowOp("swap", prow, found))
        pivot = r[prow]
        for i in range(m):
            if i != prow and r[i] & bit:
                r[i] ^= pivot
                ops.append(RowOp("add", i, prow))
        pivots.append(col)
        prow += 1
    return r, pivots, ops


def rref(m: BitMatrix) -> tuple[BitMatrix, list[RowOp]]:
    """Reduced row echelon form plus the exact sequence of row operations."""
    rows, _, ops = rref_words(m.rows, m.ncols)
    return BitMatrix(tuple(rows), m.ncols), ops


def apply_row_ops(rows: Sequence[int], ops: Iterable[RowOp]) -> list[int]:
    """Replay row operations on a parallel list of XOR-able values."""
    r = list(rows)
    for op in ops:
        if op.kind == "swap":
            r[op.target], r[op.source] = r[op.source], r[op.target]
        else:
            r[op.target] ^= r[op.source]
    return r


def _xor_basis(rows: Iterable[int]) -> dict[int, int]:
    """Echelon basis keyed by leading bit position."""
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            hb = r.bit_length() - 1
            b = basis.get(hb)
            if b is None:
                basis[hb] = r
                break
            r ^= b
    return basis


def _reduce(vec: int, basis: dict[int, int]) -> int:
    while vec:
        b = basis.get(vec.bit_length() - 1)
        if b is None:
            break
        vec ^= b
    return vec


def rank_words(rows: Iterable[int]) -> int:
    """Rank of integer rows."""
    return len(_xor_basis(rows))


def rank(m: BitMatrix) -> int:
    return rank_words(m.rows)


def in_span(vec: int, rows: Iterable[int]) -> bool:
    return _reduce(vec, _xor_basis(rows)) == 0


def solve_affine(rows: Sequence[BitVec], targets: Sequence[int], length: int | None = None) -> BitVec:
    """Return ``c`` with ``rows[j] . c == targets[j]`` for every ``j``.

    Reduces the augmented system and back-substitutes; free variables are
    set to zero so the answer is deterministic.
    """
    if len(rows) != len(targets):
        raise GF2Error("rows and targets differ in length")
    if length is None:
        if not rows:
            raise GF2Error("length required when there are no rows")
        length = rows[0].length
    for v in rows:
        if v.length != length:
            raise LengthMismatch("ragged rows")
    bits = solve_affine_words([v.bits for v in rows], [int(t) & 1 for t in targets], length)
    return BitVec(bits, length)


def solve_affine_words(rows: Sequence[int], targets: Sequence[int], length: int) -> int:
    aug = [(r << 1) | t for r, t in zip(rows, targets)]
    red, _, _ = rref_words(aug, length + 1)
    c = 0
    for w in red:
        if w == 0:
            continue
        if w == 1:
            raise InconsistentSystem("rows are dependent with conflicting targets")
        if w & 1:
            c |= 1 << ((w >> 1).bit_length() - 1)
    return c


def solve_linear_combination(basis: Sequence[BitVec], target: BitVec) -> list[int]:
    """Coefficients ``a`` with ``sum_j a[j] * basis[j] == target``."""
    for v in basis:
        target._check(v)
    return solve_linear_combination_words([v.bits for v in basis], target.bits)


def solve_linear_combination_words(basis: Sequence[int], target: int) -> list[int]:
    m = len(basis)
    # leading bit -> (reduced vector, mask of original indices combined into it)
    reduced: dict[int, tuple[int, int]] = {}
    for j, v in enumerate(basis):
        mask = 1 << j
        while v:
            hb = v.bit_length() - 1
            hit = reduced.get(hb)
            if hit is None:
                reduced[hb] = (v, mask)
                break
            v ^= hit[0]
            mask ^= hit[1]
    mask = 0
    while target:
        hit = reduced.get(target.bit_length() - 1)
        if hit is None:
            raise NotInSpan("target is not in the span of the basis")
        target ^= hit[0]
        mask ^= hit[1]
    return [(mask >> j) & 1 for j in range(m)]
