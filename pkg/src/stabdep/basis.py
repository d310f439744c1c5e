"""Sparse triple basis for the space of linear dependencies.

Each noncomputational state ``|s>`` splits as ``2^(-1/2)(|t_a> + i^k |t_b>)``
where ``|t_a>, |t_b>`` are phase-normalised states of a common Lagrangian
with half the support. The column for ``|s>`` is the dependency

    |s> - 2^(-1/2) |t_a> - 2^(-1/2) i^k |t_b> = 0

stored as three ``(row, code)`` records. Code 255 means ``+1``; codes 0..3
mean ``-2^(-1/2) * i^code``.
"""

from __future__ import annotations

import csv
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import gf2
from .enumeration import LagrangianList, StateOrdering, state_count
from .pauli import basis_action, product_phase
from .stabiliser import (
    CheckMatrix,
    ExactAmplitudeTable,
    StabiliserError,
    amplitudes,
    lambdas_to_int,
    relative_phase,
    signed_rref,
    support,
)

CODE_ONE = 255
INV_ROOT2 = 2.0 ** -0.5
BASIS_MAGIC = b"STBB"
BASIS_VERSION = 1
RECORD_DTYPE = np.dtype([("row", "<u8"), ("code", "u1")])
DEFAULT_MAX_MEM = 16 * 2**30

_CODE_VALUES = {
    CODE_ONE: 1.0 + 0j,
    0: -INV_ROOT2 + 0j,
    1: -INV_ROOT2 * 1j,
    2: INV_ROOT2 + 0j,
    3: INV_ROOT2 * 1j,
}


class BasisError(ValueError):
    pass


class ComputationalState(BasisError):
    pass


class BasisFormatError(BasisError):
    pass


class BasisResourceGuard(BasisError):
    pass


def decode(code: int) -> complex:
    try:
        return _CODE_VALUES[int(code)]
    except KeyError:
        raise BasisFormatError(f"invalid entry code {code}") from None


@dataclass(frozen=True)
class SplitResult:
    """Children of a split, ordered by the new generator's eigenvalue
    (+1 first). ``tau_codes[b]`` is ``k`` in ``|s> = 2^(-1/2) sum_b i^k_b |t_b>``
    with ``|t_b>`` phase-normalised."""

    child: CheckMatrix
    lambdas: tuple[tuple[int, ...], tuple[int, ...]]
    tau_codes: tuple[int, int]
    anchors: tuple[int, int]

    def children(self) -> tuple[CheckMatrix, CheckMatrix]:
        return self.child.with_lambdas(self.lambdas[0]), self.child.with_lambdas(self.lambdas[1])


def split(cm: CheckMatrix) -> SplitResult:
    """Split a noncomputational state into two half-support states.

    The first row's q part has its leading one at some qubit; that row is
    replaced by Z on the same qubit, which commutes with the other rows and
    halves the support. Re-reducing with tracked signs gives the canonical
    child matrix for both eigenvalues of the new row.
    """
    n = cm.n
    p1, q1 = cm.rows[0]
    if q1 == 0:
        raise ComputationalState("computational basis states do not split")
    bit = q1.bit_length() - 1
    new_rows = [(1 << bit, 0)] + list(cm.rows[1:])
    kids = []
    for b in (0, 1):
        red, lam = signed_rref(n, new_rows, (b,) + cm.lambdas[1:])
        kids.append((tuple(red), tuple(lam)))
    child_rows = kids[0][0]
    child = CheckMatrix(n, child_rows, kids[0][1])
    anchors = tuple(support(child.with_lambdas(lam)).min_element() for _, lam in kids)
    first = 0 if anchors[0] < anchors[1] else 1
    other = 1 - first
    codes = [0, 0]
    codes[other] = relative_phase(cm, anchors[first], anchors[other])
    return SplitResult(child, (kids[0][1], kids[1][1]), (codes[0], codes[1]), (anchors[0], anchors[1]))


@dataclass(frozen=True)
class TripleBasis:
    """``num_rows x num_cols`` matrix with three entries per column.

    ``rows[j]`` is sorted ascending, so ``rows[j, 2] == 2^n + j`` holds
    the unit diagonal entry.
    """

    n: int
    num_rows: int
    num_cols: int
    rows: np.ndarray
    codes: np.ndarray

    @property
    def nnz(self) -> int:
        return 3 * self.num_cols

    def values(self) -> np.ndarray:
        lut = np.zeros(256, dtype=complex)
        for c, v in _CODE_VALUES.items():
            lut[c] = v
        return lut[self.codes]

    def column(self, j: int) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in zip(self.rows[j], self.codes[j])]

    def to_csc(self) -> sp.csc_matrix:
        indptr = np.arange(0, 3 * self.num_cols + 1, 3, dtype=np.int64)
        return sp.csc_matrix(
            (self.values().ravel(), self.rows.ravel().astype(np.int64), indptr),
            shape=(self.num_rows, self.num_cols),
        )

    def column_ranks(self) -> np.ndarray:
        """Support rank of each column's state, recovered from the
        structure alone: a column's children sit exactly one rank lower."""
        offset = 1 << self.n
        child = self.rows[:, 0]
        ranks = np.zeros(self.num_cols, dtype=np.int64)
        done = child < offset
        ranks[done] = 1
        # children always precede parents, so one pass in column order suffices
        for j in np.flatnonzero(~done):
            ranks[j] = ranks[child[j] - offset] + 1
        return ranks

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripleBasis):
            return NotImplemented
        return (
            (self.n, self.num_rows, self.num_cols) == (other.n, other.num_rows, other.num_cols)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.codes, other.codes)
        )


class _LagrangianSplitter:
    """Per-Lagrangian precomputation so each of the 2^n sign tuples costs a
    handful of integer operations. Signs enter the re-reduction affinely:
    every reduced row's sign is a parity of selected input signs plus a
    constant picked up from Pauli products."""

    def __init__(self, lagrangians: LagrangianList):
        self.lags = lagrangians
        self.n = lagrangians.n

    def columns(self, li: int) -> tuple[np.ndarray, np.ndarray]:
        n = self.n
        size = 1 << n
        rows = self.lags.rows(li)
        k = sum(1 for _, q in rows if q)
        p1, q1 = rows[0]
        bit = q1.bit_length() - 1
        cur = [[1 << bit, 0]] + [[p, q] for p, q in rows[1:]]
        _, _, ops = gf2.rref_words([(q << n) | p for p, q in cur], 2 * n)
        masks = [1 << j for j in range(n)]
        consts = [0] * n
        for op in ops:
            t, s = op.target, op.source
            if op.kind == "swap":
                cur[t], cur[s] = cur[s], cur[t]
                masks[t], masks[s] = masks[s], masks[t]
                consts[t], consts[s] = consts[s], consts[t]
            else:
                ph = product_phase(cur[t][0], cur[t][1], cur[s][0], cur[s][1])
                consts[t] ^= consts[s] ^ (ph >> 1)
                masks[t] ^= masks[s]
                cur[t] = [cur[t][0] ^ cur[s][0], cur[t][1] ^ cur[s][1]]
        child_rows = tuple((p, q) for p, q in cur)
        child_li = self.lags.index_of(child_rows)
        kc = k - 1
        child_qs = [q for _, q in child_rows[:kc]]
        child_qbits = [q.bit_length() - 1 for q in child_qs]
        child_rbits = [child_rows[j][0].bit_length() - 1 for j in range(kc, n)]
        parent_qbits = [q.bit_length() - 1 for _, q in rows[:k]]

        # phase of the unsigned generator product for every subset of q rows
        prod_p = [0] * (1 << k)
        prod_q = [0] * (1 << k)
        prod_ph = [0] * (1 << k)
        for m in range(1, 1 << k):
            j = m.bit_length() - 1
            rest = m ^ (1 << j)
            pj, qj = rows[j]
            ph = product_phase(prod_p[rest], prod_q[rest], pj, qj)
            prod_p[m] = prod_p[rest] ^ pj
            prod_q[m] = prod_q[rest] ^ qj
            prod_ph[m] = (prod_ph[rest] + ph) & 3

        out_rows = np.empty((size, 3), dtype=np.int64)
        out_codes = np.empty((size, 3), dtype=np.uint8)
        base_child = child_li << n
        for lam_int in range(size):
            # sign of row j is bit n-1-j of lam_int; input vector uses bit j
            lamvec = 0
            for j in range(n):
                if lam_int >> (n - 1 - j) & 1:
                    lamvec |= 1 << j
            idx = [0, 0]
            anchor = [0, 0]
            for b in (0, 1):
                inp = (lamvec & ~1) | b
                cint = 0
                off = 0
                for j in range(n):
                    lj = ((masks[j] & inp).bit_count() & 1) ^ consts[j]
                    cint = (cint << 1) | lj
                    if lj and j >= kc:
                        off |= 1 << child_rbits[j - kc]
                for qv, qb in zip(child_qs, child_qbits):
                    if off >> qb & 1:
                        off ^= qv
                idx[b] = base_child | cint
                anchor[b] = off
            a, o = (0, 1) if anchor[0] < anchor[1] else (1, 0)
            t = anchor[a] ^ anchor[o]
            m = 0
            sign = 0
            for j, qb in enumerate(parent_qbits):
                if t >> qb & 1:
                    m |= 1 << j
                    sign ^= lamvec >> j & 1
            step, _ = basis_action(prod_p[m], prod_q[m], anchor[a])
            phi = (step + prod_ph[m] + 2 * sign) & 3
            ra, ro = idx[a], idx[o]
            if ra < ro:
                out_rows[lam_int, 0], out_rows[lam_int, 1] = ra, ro
                out_codes[lam_int, 0], out_codes[lam_int, 1] = 0, phi
            else:
                out_rows[lam_int, 0], out_rows[lam_int, 1] = ro, ra
                out_codes[lam_int, 0], out_codes[lam_int, 1] = phi, 0
            out_rows[lam_int, 2] = (li << n) | lam_int
            out_codes[lam_int, 2] = CODE_ONE
        return out_rows, out_codes


def estimate_basis_bytes(n: int) -> int:
    cols = state_count(n) - (1 << n)
    # int64 rows + uint8 codes, plus a CSC copy (values, indices) for solving
    return cols * 3 * (8 + 1) + cols * 3 * (16 + 8)


_WORKER_SPLITTER: _LagrangianSplitter | None = None


def _worker_init(lagrangians: LagrangianList) -> None:
    global _WORKER_SPLITTER
    _WORKER_SPLITTER = _LagrangianSplitter(lagrangians)


def _worker_chunk(bounds: tuple[int, int]) -> tuple[int, np.ndarray, np.ndarray]:
    lo, hi = bounds
    assert _WORKER_SPLITTER is not None
    parts = [_WORKER_SPLITTER.columns(li) for li in range(lo, hi)]
    return lo, np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def build_basis(
    ordering: StateOrdering, *, threads: int = 1, max_mem: int = DEFAULT_MAX_MEM, force: bool = False
) -> TripleBasis:
    """Assemble one column per noncomputational state, in global order."""
    n = ordering.n
    lags = ordering.lagrangians
    need = estimate_basis_bytes(n)
    if need > max_mem and not force:
        raise BasisResourceGuard(
            f"basis for n = {n} needs about {need / 2**30:.1f} GiB (limit {max_mem / 2**30:.1f} GiB)"
        )
    size = 1 << n
    num_cols = ordering.num_noncomputational
    rows = np.empty((num_cols, 3), dtype=np.int64)
    codes = np.empty((num_cols, 3), dtype=np.uint8)
    num_lags = len(lags)
    if threads <= 1 or num_lags < 64:
        splitter = _LagrangianSplitter(lags)
        for li in range(1, num_lags):
            r, c = splitter.columns(li)
            rows[(li - 1) * size : li * size] = r
            codes[(li - 1) * size : li * size] = c
    else:
        step = max(1, (num_lags - 1) // (4 * threads))
        chunks = [(lo, min(lo + step, num_lags)) for lo in range(1, num_lags, step)]
        with ProcessPoolExecutor(threads, initializer=_worker_init, initargs=(lags,)) as pool:
            for lo, r, c in pool.map(_worker_chunk, chunks):
                start = (lo - 1) * size
                rows[start : start + len(r)] = r
                codes[start : start + len(c)] = c
    return TripleBasis(n, ordering.num_states, num_cols, rows, codes)


@dataclass(frozen=True)
class CanonicalDependency:
    """``1`` at a noncomputational state, ``-<z|s>`` at each ``|z>``."""

    state: int
    entries: dict[int, complex]

    def to_dense(self, num_states: int) -> np.ndarray:
        v = np.zeros(num_states, dtype=complex)
        for r, val in self.entries.items():
            v[r] = val
        return v


def canonical_dependency(ordering: StateOrdering, state: int) -> CanonicalDependency:
    if state < ordering.num_computational:
        raise ComputationalState("canonical dependencies are indexed by noncomputational states")
    table = amplitudes(ordering.check_matrix(state)).to_dense()
    entries = {state: 1.0 + 0j}
    for z in np.flatnonzero(table):
        entries[int(z)] = -table[z]
    return CanonicalDependency(state, entries)


@dataclass(frozen=True)
class TriangularSolve:
    x: np.ndarray
    residual: np.ndarray  # gamma - Bx on the computational rows

    @property
    def residual_norm(self) -> float:
        return float(np.max(np.abs(self.residual), initial=0.0))


def triangular_solve(B: TripleBasis, gamma: np.ndarray | Mapping[int, complex]) -> TriangularSolve:
    """Solve ``Bx = gamma`` on the noncomputational rows by substitution.

    Columns of support rank ``r`` only touch rows of rank ``r - 1``, so the
    square block is solved one rank level at a time from the top down.
    """
    if isinstance(gamma, Mapping):
        g = np.zeros(B.num_rows, dtype=complex)
        for r, v in gamma.items():
            g[r] = v
    else:
        g = np.array(gamma, dtype=complex)
        if g.shape != (B.num_rows,):
            raise BasisError("gamma has the wrong length")
    offset = 1 << B.n
    res = g.copy()
    x = np.zeros(B.num_cols, dtype=complex)
    ranks = B.column_ranks()
    vals = B.values()
    for r in range(B.n, 0, -1):
        cols = np.flatnonzero(ranks == r)
        if cols.size == 0:
            continue
        xc = res[offset + cols]
        x[cols] = xc
        np.subtract.at(res, B.rows[cols].ravel(), (vals[cols] * xc[:, None]).ravel())
    return TriangularSolve(x, res[:offset])


# --- exact verification -----------------------------------------------------

_GAUSS_UNITS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def exact_column_sum(
    B: TripleBasis, j: int, table: Callable[[int], ExactAmplitudeTable]
) -> dict[int, tuple[int, int, int, int]]:
    """Evaluate column ``j`` against exact amplitude tables.

    Every term is ``g * 2^(-e/2)`` with ``g`` a Gaussian integer; after
    scaling by the largest ``2^(e/2)`` each bitstring holds ``A + sqrt(2) B``
    with Gaussian integers ``A, B``. Returns the nonzero ``(A.re, A.im,
    B.re, B.im)`` per bitstring; an empty dict means the column is exactly
    a dependency.
    """
    terms = []
    for row, code in B.column(j):
        t = table(row)
        if code == CODE_ONE:
            coeff_k, coeff_sign, coeff_e = 0, 1, 0
        else:
            coeff_k, coeff_sign, coeff_e = code, -1, 1
        terms.append((t, coeff_k, coeff_sign, coeff_e + t.rank))
    top = max(e for *_, e in terms)
    acc: dict[int, list[int]] = {}
    for t, ck, cs, e in terms:
        d = top - e
        factor = cs * (1 << (d // 2))
        slot = 2 if d % 2 else 0
        for z, ph in t.phases.items():
            re, im = _GAUSS_UNITS[(ph + ck) & 3]
            a = acc.setdefault(z, [0, 0, 0, 0])
            a[slot] += factor * re
            a[slot + 1] += factor * im
    return {z: tuple(a) for z, a in acc.items() if any(a)}


def verify_columns(B: TripleBasis, ordering: StateOrdering, columns: Sequence[int] | None = None) -> list[int]:
    """Return the columns that are not exact dependencies."""

    @lru_cache(maxsize=None)
    def table(row: int) -> ExactAmplitudeTable:
        return amplitudes(ordering.check_matrix(row))

    cols = range(B.num_cols) if columns is None else columns
    return [j for j in cols if exact_column_sum(B, int(j), table)]


def verify_structure(B: TripleBasis, ordering: StateOrdering) -> list[str]:
    """Dimension, unit diagonal and strict rank decrease of off-diagonal rows."""
    problems = []
    offset = 1 << B.n
    if B.num_cols != ordering.num_states - offset:
        problems.append(f"{B.num_cols} columns, expected {ordering.num_states - offset}")
    if B.num_rows != ordering.num_states:
        problems.append(f"{B.num_rows} rows, expected {ordering.num_states}")
    diag = offset + np.arange(B.num_cols)
    if not np.array_equal(B.rows[:, 2], diag):
        problems.append("diagonal entries are not at row 2^n + j")
    if not np.all(B.codes[:, 2] == CODE_ONE):
        problems.append("diagonal entries are not 1")
    if np.any(B.codes[:, :2] > 3):
        problems.append("off-diagonal codes outside 0..3")
    ranks = ordering.state_ranks()
    col_rank = ranks[diag]
    for c in (0, 1):
        if np.any(ranks[B.rows[:, c]] >= col_rank):
            problems.append(f"entry {c} does not have strictly smaller support rank")
        if np.any(ranks[B.rows[:, c]] != col_rank - 1):
            problems.append(f"entry {c} is not exactly one rank lower")
    if np.any(B.rows[:, 0] >= B.rows[:, 1]) or np.any(B.rows[:, 1] >= B.rows[:, 2]):
        problems.append("rows within a column are not strictly increasing")
    return problems


# --- file formats -------------------------------------------------------------

def export_basis(B: TripleBasis, path: str | os.PathLike, fmt: str = "bin") -> None:
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(BASIS_MAGIC)
            fh.write(struct.pack("<BBQQ", BASIS_VERSION, B.n, B.num_rows, B.num_cols))
            block = 1 << 16
            for lo in range(0, B.num_cols, block):
                hi = min(lo + block, B.num_cols)
                rec = np.empty((hi - lo) * 3, dtype=RECORD_DTYPE)
                rec["row"] = B.rows[lo:hi].ravel()
                rec["code"] = B.codes[lo:hi].ravel()
                fh.write(rec.tobytes())
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["col", "row", "code"])
            for j in range(B.num_cols):
                for r, c in zip(B.rows[j], B.codes[j]):
                    w.writerow([j, int(r), int(c)])
    else:
        raise BasisFormatError(f"unknown format {fmt!r}")


def _n_from_cols(num_cols: int) -> int:
    for n in range(1, 33):
        extra = state_count(n) - (1 << n)
        if extra == num_cols:
            return n
        if extra > num_cols:
            break
    raise BasisFormatError(f"{num_cols} columns does not match any qubit count")


def _checked(n: int, num_rows: int, num_cols: int, rows: np.ndarray, codes: np.ndarray) -> TripleBasis:
    if num_rows != state_count(n) or num_cols != num_rows - (1 << n):
        raise BasisFormatError("dimensions do not match the qubit count")
    if rows.shape != (num_cols, 3) or codes.shape != (num_cols, 3):
        raise BasisFormatError("record count does not match the dimensions")
    if np.any(rows >= num_rows) or np.any(rows < 0):
        raise BasisFormatError("row index out of range")
    if np.any((codes > 3) & (codes != CODE_ONE)):
        raise BasisFormatError("invalid entry code")
    return TripleBasis(n, num_rows, num_cols, rows, codes)


def import_basis(path: str | os.PathLike) -> TripleBasis:
    data = Path(path).read_bytes()
    if data[:4] == BASIS_MAGIC:
        head = 4 + struct.calcsize("<BBQQ")
        if len(data) < head:
            raise BasisFormatError("truncated header")
        version, n, num_rows, num_cols = struct.unpack_from("<BBQQ", data, 4)
        if version != BASIS_VERSION:
            raise BasisFormatError(f"unsupported version {version}")
        if len(data) != head + num_cols * 3 * RECORD_DTYPE.itemsize:
            raise BasisFormatError("payload length does not match the header")
        rec = np.frombuffer(data, dtype=RECORD_DTYPE, offset=head)
        rows = rec["row"].astype(np.int64).reshape(num_cols, 3)
        codes = rec["code"].copy().reshape(num_cols, 3)
        return _checked(n, num_rows, num_cols, rows, codes)
    text = data.decode("ascii", errors="replace").splitlines()
    if not text or text[0].strip() != "col,row,code":
        raise BasisFormatError("not a basis file (bad magic)")
    body = np.loadtxt(text[1:], delimiter=",", dtype=np.int64, ndmin=2)
    if body.size == 0 or body.shape[1] != 3 or body.shape[0] % 3:
        raise BasisFormatError("malformed CSV body")
    num_cols = body.shape[0] // 3
    if not np.array_equal(body[:, 0], np.repeat(np.arange(num_cols), 3)):
        raise BasisFormatError("CSV columns out of order")
    n = _n_from_cols(num_cols)
    return _checked(n, state_count(n), num_cols, body[:, 1].reshape(num_cols, 3), body[:, 2].astype(np.uint8).reshape(num_cols, 3))
