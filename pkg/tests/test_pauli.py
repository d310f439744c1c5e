from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
import pytest

from stabdep import pauli
from stabdep.pauli import PhasedPauli, SymplecticVector
from stabdep.verify import suite_pauli

# textbook single-qubit matrices; W(1,1) is Hermitian Y
MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PHASES = [1, 1j, -1, -1j]


def oracle(a: PhasedPauli) -> np.ndarray:
    letters = a.label().lstrip("+-i")
    return PHASES[a.phase] * reduce(np.kron, [MATS[c] for c in letters], np.ones((1, 1)))


def everything(n: int):
    for p, q, ph in itertools.product(range(1 << n), range(1 << n), range(4)):
        yield PhasedPauli(p, q, n, ph)


def test_label_roundtrip():
    for label in ["+XZ", "-iYI", "+iZZY", "-X"]:
        assert PhasedPauli.from_label(label).label() == label
    assert PhasedPauli.from_label("Y") == PhasedPauli(1, 1, 1)


def test_package_dense_matches_textbook():
    for n in (1, 2):
        for a in everything(n):
            assert np.array_equal(pauli.dense(a), oracle(a))


class TestSymplectic:
    def test_examples(self):
        z, x = SymplecticVector(1, 0, 1), SymplecticVector(0, 1, 1)
        assert pauli.symplectic_product(z, x) == 1
        assert pauli.symplectic_product(z, z) == 0
        a, b = SymplecticVector(0b10, 0b01, 2), SymplecticVector(0b01, 0b10, 2)
        assert pauli.symplectic_product(a, b) == 0

    def test_pack_roundtrip(self):
        for p, q in itertools.product(range(8), repeat=2):
            v = SymplecticVector(p, q, 3)
            assert SymplecticVector.unpack(v.pack(), 3) == v


class TestMultiply:
    def test_zx_is_iy(self):
        zx = PhasedPauli.from_label("Z") * PhasedPauli.from_label("X")
        assert (zx.p, zx.q, zx.phase) == (1, 1, 1)
        assert np.array_equal(oracle(zx), 1j * MATS["Y"])

    def test_involution_and_identity(self):
        for a in everything(2):
            if a.phase == 0:
                assert a * a == PhasedPauli.identity(2)
            assert PhasedPauli.identity(2) * a == a

    @pytest.mark.parametrize("n", [1, 2])
    def test_exhaustive_dense(self, n):
        ops = list(everything(n))
        dense = {a: oracle(a) for a in ops}
        for a, b in itertools.product(ops, repeat=2):
            prod = dense[a] @ dense[b]
            assert np.array_equal(dense[a * b], prod)
            assert pauli.commutes(a, b) == np.array_equal(prod, dense[b] @ dense[a])

    def test_random_n3(self):
        rng = np.random.default_rng(3)
        for _ in range(10_000):
            a, b = (PhasedPauli(*map(int, rng.integers(0, 8, 2)), 3, int(rng.integers(4))) for _ in range(2))
            da, db = oracle(a), oracle(b)
            assert np.array_equal(oracle(a * b), da @ db)
            assert pauli.commutes(a, b) == np.array_equal(da @ db, db @ da)

    def test_length_mismatch(self):
        with pytest.raises(pauli.LengthMismatch):
            PhasedPauli.identity(1) * PhasedPauli.identity(2)


class TestApply:
    def test_examples(self):
        assert pauli.apply_to_basis_state(PhasedPauli(0, 1, 1), 0) == (0, 1)
        assert pauli.apply_to_basis_state(PhasedPauli(1, 0, 1), 1) == (2, 1)
        assert pauli.apply_to_basis_state(PhasedPauli(1, 1, 1), 0) == (1, 1)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_dense_columns(self, n):
        for a in everything(n):
            d = oracle(a)
            for z in range(1 << n):
                k, z2 = pauli.apply_to_basis_state(a, z)
                col = np.zeros(1 << n, dtype=complex)
                col[z2] = PHASES[k]
                assert np.array_equal(d[:, z], col)


def test_unsigned_operators_are_hermitian():
    for a in everything(3):
        if a.phase == 0:
            d = oracle(a)
            assert np.array_equal(d, d.conj().T)


def test_verify_suite_passes():
    assert suite_pauli(2).passed
