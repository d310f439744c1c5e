"""Enumeration of Lagrangian subspaces and the global state order.

Every Lagrangian subspace has a unique canonical check matrix (RREF on
``(q | p)``). Its first ``k`` rows carry a q part spanning a subspace ``V``
of Z_2^n, the remaining rows are ``(0 | r_j)`` with the ``r_j`` an RREF
basis of the orthogonal complement of ``V``. Once ``V`` is fixed, the
p parts of the first ``k`` rows are pinned down (after clearing the r-pivot
columns) by the symmetric ``k x k`` matrix ``p_i . q_j``. Walking over
pivot patterns of ``V``, its free entries, and all symmetric matrices
therefore yields each subspace exactly once without a dedupe set.

States are ordered by Lagrangian (support rank, then the packed row words)
and within a Lagrangian by the sign tuple read as a binary integer. The
rank-0 Lagrangian comes first, so indices ``0 .. 2^n - 1`` are the
computational basis states in their natural order.
"""

from __future__ import annotations

import itertools
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import gf2
from .pauli import symplectic_form
from .stabiliser import CheckMatrix, int_to_lambdas, lambdas_to_int

SOFT_MAX_QUBITS = 6
CACHE_MAGIC = b"STLG"
CACHE_VERSION = 1
CACHE_ENV = "STABDEP_CACHE_DIR"


class EnumerationError(ValueError):
    pass


class ResourceGuard(EnumerationError):
    pass


class CacheError(EnumerationError):
    pass


class CorruptCache(CacheError):
    pass


class CacheMismatch(CacheError):
    pass


def lagrangian_count(n: int) -> int:
    """prod_{k=1..n} (2^k + 1)."""
    out = 1
    for k in range(1, n + 1):
        out *= (1 << k) + 1
    return out


def state_count(n: int) -> int:
    return lagrangian_count(n) << n


def _rref_subspaces(n: int, k: int) -> Iterator[list[int]]:
    """All k-dimensional subspaces of Z_2^n as RREF bases (MSB-first)."""
    for pivots in itertools.combinations(range(n), k):
        pivot_set = set(pivots)
        slots = []  # (row, column) free entries
        for i, pc in enumerate(pivots):
            for c in range(pc + 1, n):
                if c not in pivot_set:
                    slots.append((i, c))
        base = [1 << (n - 1 - pc) for pc in pivots]
        for fill in range(1 << len(slots)):
            rows = list(base)
            for s, (i, c) in enumerate(slots):
                if fill >> s & 1:
                    rows[i] |= 1 << (n - 1 - c)
            yield rows


def _complement_basis(n: int, qs: Sequence[int]) -> list[int]:
    """RREF basis of {r : r . q = 0 for all q in qs}; qs must be RREF."""
    pivot_bits = [q.bit_length() - 1 for q in qs]
    pivot_mask = 0
    for b in pivot_bits:
        pivot_mask |= 1 << b
    vecs = []
    for f in range(n):
        fbit = 1 << f
        if pivot_mask & fbit:
            continue
        v = fbit
        for q, b in zip(qs, pivot_bits):
            if q & fbit:
                v |= 1 << b
        vecs.append(v)
    red, _, _ = gf2.rref_words(vecs, n)
    return red


def _lagrangians_with_q_rank(n: int, k: int) -> Iterator[tuple[tuple[int, int], ...]]:
    sym_slots = [(i, j) for i in range(k) for j in range(i, k)]
    for qs in _rref_subspaces(n, k):
        rs = _complement_basis(n, qs)
        r_pivots = 0
        for r in rs:
            r_pivots |= 1 << (r.bit_length() - 1)
        free_cols = [b for b in range(n) if not r_pivots >> b & 1]
        # p over the free columns -> (p.q_1, ..., p.q_k); bijective
        inverse: dict[int, int] = {}
        for fill in range(1 << k):
            p = 0
            for s, b in enumerate(free_cols):
                if fill >> s & 1:
                    p |= 1 << b
            image = 0
            for i, q in enumerate(qs):
                image |= gf2.parity(p & q) << i
            inverse[image] = p
        tail = tuple((r, 0) for r in rs)
        for fill in range(1 << len(sym_slots)):
            targets = [0] * k
            for s, (i, j) in enumerate(sym_slots):
                if fill >> s & 1:
                    targets[i] |= 1 << j
                    targets[j] |= 1 << i
            head = tuple((inverse[targets[i]], qs[i]) for i in range(k))
            yield head + tail


def packed_words(n: int, rows: Sequence[tuple[int, int]]) -> tuple[int, ...]:
    return tuple(q | (p << n) for p, q in rows)


def unpack_words(n: int, words: Sequence[int]) -> tuple[tuple[int, int], ...]:
    mask = (1 << n) - 1
    return tuple(((w >> n) & mask, w & mask) for w in words)


@dataclass
class LagrangianList:
    """Canonical Lagrangians sorted by (support rank, packed row words)."""

    n: int
    entries: list[tuple[int, ...]]
    ranks: list[int]
    _index: dict[tuple[int, ...], int] | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def rows(self, i: int) -> tuple[tuple[int, int], ...]:
        return unpack_words(self.n, self.entries[i])

    def check_matrix(self, i: int, lambdas: Sequence[int] | None = None) -> CheckMatrix:
        return CheckMatrix(self.n, self.rows(i), tuple(lambdas) if lambdas is not None else ())

    def index_of(self, rows: Sequence[tuple[int, int]]) -> int:
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.entries)}
        try:
            return self._index[packed_words(self.n, rows)]
        except KeyError:
            raise EnumerationError("row set is not a canonical Lagrangian of this list") from None

    def validate(self) -> None:
        """Check count, canonical form, isotropy, order and distinctness."""
        if len(self.entries) != lagrangian_count(self.n):
            raise EnumerationError(
                f"{len(self.entries)} entries, expected {lagrangian_count(self.n)}"
            )
        if len(set(self.entries)) != len(self.entries):
            raise EnumerationError("duplicate Lagrangians")
        keys = [(r, w) for r, w in zip(self.ranks, self.entries)]
        if keys != sorted(keys):
            raise EnumerationError("list is not sorted by (rank, words)")
        for i in range(len(self)):
            cm = self.check_matrix(i)
            cm.validate()
            if gf2.rank_words(q for _, q in cm.rows) != self.ranks[i]:
                raise EnumerationError(f"entry {i} has a wrong rank")


def enumerate_lagrangians(n: int, *, allow_large: bool = False) -> LagrangianList:
    if n < 1:
        raise EnumerationError("n must be positive")
    if n > SOFT_MAX_QUBITS and not allow_large:
        raise ResourceGuard(f"n = {n} exceeds the soft limit {SOFT_MAX_QUBITS}")
    keyed = []
    for k in range(n + 1):
        for rows in _lagrangians_with_q_rank(n, k):
            keyed.append((k, packed_words(n, rows)))
    keyed.sort()
    return LagrangianList(n, [w for _, w in keyed], [k for k, _ in keyed])


def lagrangians_by_closure(n: int) -> set[tuple[int, ...]]:
    """Independent cross-check: grow isotropic subspaces one vector at a
    time, deduplicating by RREF, and return the canonical packed words of
    every maximal one. Exponential; intended for n <= 4."""
    if n > 4:
        raise ResourceGuard("closure enumeration is limited to n <= 4")
    size = 1 << (2 * n)
    mask = (1 << n) - 1
    # vectors in echelon layout (q << n) | p
    level: set[tuple[int, ...]] = {()}
    for _ in range(n):
        nxt: set[tuple[int, ...]] = set()
        for basis in level:
            for v in range(1, size):
                vp, vq = v & mask, v >> n
                if any(symplectic_form(vp, vq, b & mask, b >> n) for b in basis):
                    continue
                if gf2.in_span(v, basis):
                    continue
                red, _, _ = gf2.rref_words(list(basis) + [v], 2 * n)
                nxt.add(tuple(red))
        level = nxt
    out = set()
    for basis in level:
        rows = tuple((b & mask, b >> n) for b in basis)
        out.add(packed_words(n, rows))
    return out


@dataclass
class StateOrdering:
    """Bijection between global state indices and (Lagrangian, sign tuple)."""

    lagrangians: LagrangianList
    _level_starts: list[int] | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.lagrangians.n

    @property
    def num_states(self) -> int:
        return len(self.lagrangians) << self.n

    @property
    def num_computational(self) -> int:
        return 1 << self.n

    @property
    def num_noncomputational(self) -> int:
        return self.num_states - self.num_computational

    def state_index(self, lagrangian_index: int, lambdas: Sequence[int] | int) -> int:
        if not 0 <= lagrangian_index < len(self.lagrangians):
            raise IndexError(f"Lagrangian index {lagrangian_index} out of range")
        lam = lambdas if isinstance(lambdas, int) else lambdas_to_int(lambdas)
        if not isinstance(lambdas, int) and len(lambdas) != self.n:
            raise IndexError("sign tuple has the wrong length")
        if not 0 <= lam < (1 << self.n):
            raise IndexError("sign tuple out of range")
        return (lagrangian_index << self.n) | lam

    def state_of_index(self, index: int) -> tuple[int, tuple[int, ...]]:
        if not 0 <= index < self.num_states:
            raise IndexError(f"state index {index} out of range")
        return index >> self.n, int_to_lambdas(index & ((1 << self.n) - 1), self.n)

    def check_matrix(self, index: int) -> CheckMatrix:
        li, lam = self.state_of_index(index)
        return self.lagrangians.check_matrix(li, lam)

    def support_rank(self, index: int) -> int:
        return self.lagrangians.ranks[index >> self.n]

    def state_ranks(self) -> np.ndarray:
        return np.repeat(np.asarray(self.lagrangians.ranks, dtype=np.int8), 1 << self.n)

    def level_starts(self) -> list[int]:
        """``starts[r]`` is the first state index of support rank ``r``;
        ``starts[n + 1] == num_states``."""
        if self._level_starts is None:
            ranks = self.lagrangians.ranks
            starts = [0] * (self.n + 2)
            counts = [0] * (self.n + 1)
            for r in ranks:
                counts[r] += 1
            acc = 0
            for r in range(self.n + 1):
                starts[r] = acc
                acc += counts[r] << self.n
            starts[self.n + 1] = acc
            self._level_starts = starts
        return self._level_starts


def save_cache(lagrangians: LagrangianList, path: str | os.PathLike) -> None:
    n = lagrangians.n
    words = np.asarray(lagrangians.entries, dtype="<u8").reshape(len(lagrangians), n)
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<BBQ", CACHE_VERSION, n, len(lagrangians)))
        fh.write(words.tobytes())


def load_cache(path: str | os.PathLike, n: int | None = None) -> LagrangianList:
    data = Path(path).read_bytes()
    header = len(CACHE_MAGIC) + struct.calcsize("<BBQ")
    if len(data) < header or data[:4] != CACHE_MAGIC:
        raise CorruptCache(f"{path}: bad magic or truncated header")
    version, file_n, count = struct.unpack_from("<BBQ", data, 4)
    if version != CACHE_VERSION:
        raise CacheMismatch(f"{path}: cache version {version}, expected {CACHE_VERSION}")
    if n is not None and file_n != n:
        raise CacheMismatch(f"{path}: cache holds n = {file_n}, requested n = {n}")
    if count != lagrangian_count(file_n):
        raise CorruptCache(f"{path}: entry count {count} is not the Lagrangian count")
    if len(data) != header + 8 * file_n * count:
        raise CorruptCache(f"{path}: payload length does not match entry count")
    words = np.frombuffer(data, dtype="<u8", offset=header).reshape(count, file_n)
    entries = [tuple(int(w) for w in row) for row in words.tolist()]
    ranks = [gf2.rank_words(w & ((1 << file_n) - 1) for w in e) for e in entries]
    out = LagrangianList(file_n, entries, ranks)
    keys = list(zip(ranks, entries))
    if keys != sorted(keys):
        raise CorruptCache(f"{path}: entries out of canonical order")
    return out


def default_cache_path(n: int, cache_dir: str | os.PathLike | None = None) -> Path | None:
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return None
    return Path(cache_dir) / f"lagrangians_n{n}.stlg"


def load_or_enumerate(n: int, cache_dir: str | os.PathLike | None = None, *, allow_large: bool = False) -> LagrangianList:
    """Use the cache file when one exists, otherwise enumerate."""
    path = default_cache_path(n, cache_dir)
    if path is not None and path.exists():
        return load_cache(path, n)
    return enumerate_lagrangians(n, allow_large=allow_large)


def state_ordering(n: int, cache_dir: str | os.PathLike | None = None) -> StateOrdering:
    return StateOrdering(load_or_enumerate(n, cache_dir))
