"""Phase-exact Pauli arithmetic.

A Pauli on ``n`` qubits is labelled by a pair of ``n``-bit integers
``(p, q)`` with qubit 1 in the most significant bit. The canonical
operator is

    W(p, q) = (-i)^(p.q mod 4) Z^p X^q

which is Hermitian for every label. Phases are tracked as integer
exponents of ``i`` modulo 4; nothing in here touches floating point
except :func:`dense`, which exists for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import LengthMismatch

MAX_QUBITS = 32
DENSE_MAX_QUBITS = 4

# i^k for k = 0..3
I_POWERS = np.array([1, 1j, -1, -1j], dtype=complex)


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count {n} outside [1, {MAX_QUBITS}]")


@dataclass(frozen=True)
class SymplecticVector:
    """A point ``(p, q)`` of Z_2^{2n}."""

    p: int
    q: int
    n: int

    def __post_init__(self) -> None:
        _check_n(self.n)
        lim = 1 << self.n
        if not (0 <= self.p < lim and 0 <= self.q < lim):
            raise ValueError("p/q do not fit in n bits")

    def pack(self) -> int:
        """Cache-file word: ``q`` in the low ``n`` bits, ``p`` above it."""
        return self.q | (self.p << self.n)

    @classmethod
    def unpack(cls, word: int, n: int) -> SymplecticVector:
        mask = (1 << n) - 1
        return cls(word >> n & mask, word & mask, n)

    def __add__(self, other: SymplecticVector) -> SymplecticVector:
        if self.n != other.n:
            raise LengthMismatch("qubit counts differ")
        return SymplecticVector(self.p ^ other.p, self.q ^ other.q, self.n)


def symplectic_form(p1: int, q1: int, p2: int, q2: int) -> int:
    return ((p1 & q2).bit_count() + (p2 & q1).bit_count()) & 1


def symplectic_product(a: SymplecticVector, b: SymplecticVector) -> int:
    """``p1.q2 - p2.q1 mod 2``; zero exactly when W(a) and W(b) commute."""
    if a.n != b.n:
        raise LengthMismatch("qubit counts differ")
    return symplectic_form(a.p, a.q, b.p, b.q)


def product_phase(p1: int, q1: int, p2: int, q2: int) -> int:
    """Exponent ``k`` with ``W(p1,q1) W(p2,q2) = i^k W(p1^p2, q1^q2)``.

    Moving ``X^q1`` past ``Z^p2`` costs ``(-1)^(q1.p2)``; the two input
    prefactors contribute ``-(p1.q1) - (p2.q2)`` and re-expressing
    ``Z^p3 X^q3`` as ``W`` contributes ``+(p3.q3)``.
    """
    p3 = p1 ^ p2
    q3 = q1 ^ q2
    return (
        (p3 & q3).bit_count()
        - (p1 & q1).bit_count()
        - (p2 & q2).bit_count()
        + 2 * (q1 & p2).bit_count()
    ) & 3


def basis_action(p: int, q: int, z: int) -> tuple[int, int]:
    """``W(p,q)|z> = i^k |z ^ q>``; returns ``(k, z ^ q)``."""
    zq = z ^ q
    return (2 * (p & zq).bit_count() - (p & q).bit_count()) & 3, zq


@dataclass(frozen=True)
class PhasedPauli:
    """The operator ``i^phase * W(p, q)``."""

    p: int
    q: int
    n: int
    phase: int = 0

    def __post_init__(self) -> None:
        _check_n(self.n)
        lim = 1 << self.n
        if not (0 <= self.p < lim and 0 <= self.q < lim):
            raise ValueError("p/q do not fit in n bits")
        object.__setattr__(self, "phase", self.phase & 3)

    @classmethod
    def identity(cls, n: int) -> PhasedPauli:
        return cls(0, 0, n)

    @classmethod
    def from_label(cls, label: str) -> PhasedPauli:
        """Parse e.g. ``"-iXZY"``; Y is the Hermitian W(1,1)."""
        phase = 0
        s = label.strip()
        if s.startswith("+"):
            s = s[1:]
        elif s.startswith("-"):
            phase = 2
            s = s[1:]
        if s.startswith("i"):
            phase += 1
            s = s[1:]
        p = q = 0
        for ch in s:
            p <<= 1
            q <<= 1
            if ch in "ZY":
                p |= 1
            if ch in "XY":
                q |= 1
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(p, q, len(s), phase)

    @property
    def vec(self) -> SymplecticVector:
        return SymplecticVector(self.p, self.q, self.n)

    def label(self) -> str:
        prefix = ["+", "+i", "-", "-i"][self.phase]
        letters = []
        for j in range(self.n):
            bit = 1 << (self.n - 1 - j)
            letters.append("IXZY"[bool(self.q & bit) + 2 * bool(self.p & bit)])
        return prefix + "".join(letters)

    def __mul__(self, other: PhasedPauli) -> PhasedPauli:
        return pauli_multiply(self, other)

    def signed(self, lam: int) -> PhasedPauli:
        """Multiply by ``(-1)^lam``."""
        return PhasedPauli(self.p, self.q, self.n, self.phase + 2 * (lam & 1))


def pauli_multiply(a: PhasedPauli, b: PhasedPauli) -> PhasedPauli:
    if a.n != b.n:
        raise LengthMismatch("qubit counts differ")
    k = product_phase(a.p, a.q, b.p, b.q)
    return PhasedPauli(a.p ^ b.p, a.q ^ b.q, a.n, a.phase + b.phase + k)


def commutes(a: PhasedPauli, b: PhasedPauli) -> bool:
    if a.n != b.n:
        raise LengthMismatch("qubit counts differ")
    return symplectic_form(a.p, a.q, b.p, b.q) == 0


def apply_to_basis_state(a: PhasedPauli, z: int) -> tuple[int, int]:
    """Return ``(k, z')`` with ``a|z> = i^k |z'>``."""
    if not 0 <= z < (1 << a.n):
        raise ValueError("basis state does not fit in n bits")
    k, zq = basis_action(a.p, a.q, z)
    return (k + a.phase) & 3, zq


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def dense(a: PhasedPauli) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix; test helper, limited to small ``n``."""
    if a.n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense matrices limited to n <= {DENSE_MAX_QUBITS}")
    out = np.ones((1, 1), dtype=complex)
    for j in range(a.n):
        bit = 1 << (a.n - 1 - j)
        f = _I2
        if a.p & bit:
            f = f @ _Z
        if a.q & bit:
            f = f @ _X
        out = np.kron(out, f)
    k = (a.phase - (a.p & a.q).bit_count()) & 3
    return I_POWERS[k] * out
