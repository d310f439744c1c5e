"""Stabiliser states as check matrices with sign bits.

A state is fixed by ``n`` commuting generators ``(p_j, q_j)`` and sign bits
``lambda_j`` through ``(-1)^lambda_j W(p_j, q_j)|s> = |s>``. The canonical
check matrix has rows ``(q_j | p_j)`` in reduced row echelon form, columns
ordered q-block first, qubit 1 leftmost. Amplitudes are never built from a
quadratic form; they are carried from one support point to another by
products of the signed generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import gf2
from .pauli import I_POWERS, MAX_QUBITS, PhasedPauli, basis_action, product_phase, symplectic_form

TABLE_MAX_QUBITS = 12


class StabiliserError(ValueError):
    pass


class MalformedCheckMatrix(StabiliserError):
    pass


class NotInSupport(StabiliserError):
    pass


def echelon_word(p: int, q: int, n: int) -> int:
    """Row ``(q | p)`` as a 2n-bit word with q_1 in the top bit."""
    return (q << n) | p


def lambdas_to_int(lambdas: Sequence[int]) -> int:
    """Sign tuple as a binary integer, lambda_1 most significant."""
    v = 0
    for lam in lambdas:
        v = (v << 1) | (lam & 1)
    return v


def int_to_lambdas(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> (n - 1 - j)) & 1 for j in range(n))


def signed_rref(
    n: int, rows: Sequence[tuple[int, int]], lambdas: Sequence[int]
) -> tuple[list[tuple[int, int]], list[int]]:
    """Row-reduce signed generators.

    Adding row ``s`` into row ``t`` replaces the signed Pauli on row ``t``
    by the product of the two; for commuting Hermitian Paulis that product
    is ``+-W(sum)`` and the extra sign is folded into ``lambda_t``.
    """
    words = [echelon_word(p, q, n) for p, q in rows]
    _, _, ops = gf2.rref_words(words, 2 * n)
    cur = [list(r) for r in rows]
    lam = [int(x) & 1 for x in lambdas]
    for op in ops:
        t, s = op.target, op.source
        if op.kind == "swap":
            cur[t], cur[s] = cur[s], cur[t]
            lam[t], lam[s] = lam[s], lam[t]
        else:
            k = product_phase(cur[t][0], cur[t][1], cur[s][0], cur[s][1])
            if k & 1:
                raise MalformedCheckMatrix("row operation on anticommuting generators")
            lam[t] ^= lam[s] ^ (k >> 1)
            cur[t][0] ^= cur[s][0]
            cur[t][1] ^= cur[s][1]
    return [(p, q) for p, q in cur], lam


@dataclass(frozen=True)
class CheckMatrix:
    """Canonical check matrix; ``rows[j] = (p_j, q_j)``."""

    n: int
    rows: tuple[tuple[int, int], ...]
    lambdas: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_QUBITS:
            raise MalformedCheckMatrix(f"qubit count {self.n} outside [1, {MAX_QUBITS}]")
        if not self.lambdas:
            object.__setattr__(self, "lambdas", (0,) * self.n)
        if len(self.rows) != self.n or len(self.lambdas) != self.n:
            raise MalformedCheckMatrix("need exactly n rows and n sign bits")

    @classmethod
    def from_generators(
        cls, n: int, rows: Sequence[tuple[int, int]], lambdas: Sequence[int] | None = None
    ) -> CheckMatrix:
        """Canonicalise arbitrary commuting independent generators."""
        if lambdas is None:
            lambdas = [0] * n
        red, lam = signed_rref(n, rows, lambdas)
        cm = cls(n, tuple(red), tuple(lam))
        cm.validate()
        return cm

    @classmethod
    def from_labels(cls, labels: Sequence[str]) -> CheckMatrix:
        """Build from signed Pauli strings such as ``["XX", "-ZZ"]``."""
        paulis = [PhasedPauli.from_label(s) for s in labels]
        n = paulis[0].n
        lams = []
        for pa in paulis:
            if pa.phase & 1:
                raise MalformedCheckMatrix("generators must carry a real sign")
            lams.append(pa.phase >> 1)
        return cls.from_generators(n, [(pa.p, pa.q) for pa in paulis], lams)

    def with_lambdas(self, lambdas: Sequence[int]) -> CheckMatrix:
        return CheckMatrix(self.n, self.rows, tuple(int(x) & 1 for x in lambdas))

    def echelon_words(self) -> list[int]:
        return [echelon_word(p, q, self.n) for p, q in self.rows]

    def packed_words(self) -> tuple[int, ...]:
        """Cache-layout words (q low, p high)."""
        return tuple(q | (p << self.n) for p, q in self.rows)

    @property
    def num_q_rows(self) -> int:
        """Rows with a nonzero q part; they come first in canonical form."""
        return sum(1 for _, q in self.rows if q)

    def generator(self, j: int) -> PhasedPauli:
        p, q = self.rows[j]
        return PhasedPauli(p, q, self.n, 2 * self.lambdas[j])

    def validate(self) -> None:
        n = self.n
        words = self.echelon_words()
        if gf2.rank_words(words) != n:
            raise MalformedCheckMatrix("generators are not independent")
        for i in range(n):
            for j in range(i + 1, n):
                if symplectic_form(*self.rows[i], *self.rows[j]):
                    raise MalformedCheckMatrix(f"rows {i} and {j} anticommute")
        if not gf2.is_rref(words, 2 * n):
            raise MalformedCheckMatrix("check matrix is not in reduced row echelon form")


@dataclass(frozen=True)
class AffineSupport:
    """The support ``offset + span(basis)``; ``basis`` is in RREF."""

    n: int
    offset: int
    basis: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return 1 << len(self.basis)

    def _reduce(self, z: int) -> int:
        for b in self.basis:
            if z >> (b.bit_length() - 1) & 1:
                z ^= b
        return z

    def min_element(self) -> int:
        return self._reduce(self.offset)

    def __contains__(self, z: int) -> bool:
        return self._reduce(z ^ self.offset) == 0

    def elements(self) -> list[int]:
        out = [self.offset]
        for b in self.basis:
            out += [z ^ b for z in out]
        return sorted(out)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements())


def support_rank(cm: CheckMatrix) -> int:
    """Rank of the matrix of q rows; the support has 2^rank points."""
    return gf2.rank_words(q for _, q in cm.rows)


def _split_rows(cm: CheckMatrix) -> tuple[list[int], list[int], list[int]]:
    k = cm.num_q_rows
    for j, (_, q) in enumerate(cm.rows):
        if (q != 0) != (j < k):
            raise MalformedCheckMatrix("rows with q != 0 must precede pure-Z rows")
    qs = [q for _, q in cm.rows[:k]]
    rs = [p for p, _ in cm.rows[k:]]
    mus = list(cm.lambdas[k:])
    return qs, rs, mus


def support(cm: CheckMatrix) -> AffineSupport:
    qs, rs, mus = _split_rows(cm)
    offset = gf2.solve_affine_words(rs, mus, cm.n) if rs else 0
    return AffineSupport(cm.n, offset, tuple(qs))


def transport(cm: CheckMatrix, alphas: Sequence[int]) -> PhasedPauli:
    """Product of the signed generators selected by ``alphas``, in row order."""
    g = PhasedPauli.identity(cm.n)
    for j, a in enumerate(alphas):
        if a:
            g = g * cm.generator(j)
    return g


def relative_phase(cm: CheckMatrix, l1: int, l2: int) -> int:
    """Exponent ``k`` with ``<l2|s> = i^k <l1|s>``.

    The product ``G`` of signed generators whose q parts sum to
    ``l1 ^ l2`` stabilises the state and maps ``|l1>`` to a multiple of
    ``|l2>``; that multiple is the amplitude ratio.
    """
    sup = support(cm)
    if l1 not in sup or l2 not in sup:
        raise NotInSupport(f"{l1:b} or {l2:b} not in support")
    qs = [q for _, q in cm.rows]
    try:
        alphas = gf2.solve_linear_combination_words(qs, l1 ^ l2)
    except gf2.NotInSpan as exc:  # pragma: no cover - excluded by the support check
        raise NotInSupport(str(exc)) from exc
    g = transport(cm, alphas)
    k, dest = basis_action(g.p, g.q, l1)
    assert dest == l2
    return (k + g.phase) & 3


@dataclass(frozen=True)
class ExactAmplitudeTable:
    """Amplitudes ``i^phases[z] * 2^(-rank/2)`` on the support."""

    n: int
    rank: int
    phases: dict[int, int]

    def to_dense(self) -> np.ndarray:
        v = np.zeros(1 << self.n, dtype=complex)
        scale = 2.0 ** (-self.rank / 2)
        for z, k in self.phases.items():
            v[z] = I_POWERS[k] * scale
        return v


def amplitudes(cm: CheckMatrix) -> ExactAmplitudeTable:
    """Exact amplitudes with phase 0 at the smallest support bitstring."""
    if cm.n > TABLE_MAX_QUBITS:
        raise StabiliserError(f"amplitude tables limited to n <= {TABLE_MAX_QUBITS}")
    sup = support(cm)
    k = sup.rank
    anchor = sup.min_element()
    phases = {anchor: 0}
    # walk the support one generator at a time
    for j in range(k):
        p, q = cm.rows[j]
        sign = 2 * cm.lambdas[j]
        for z, ph in list(phases.items()):
            step, dest = basis_action(p, q, z)
            phases[dest] = (ph + step + sign) & 3
    return ExactAmplitudeTable(cm.n, k, phases)


def state_vector(cm: CheckMatrix) -> np.ndarray:
    return amplitudes(cm).to_dense()
