from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
import pytest

from stabdep import gf2
from stabdep.extent import _basis, _ordering
from stabdep.pauli import symplectic_form

MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def textbook_dense(label: str) -> np.ndarray:
    """Signed Pauli string such as ``-XZ`` as a matrix, from textbook factors."""
    sign = -1 if label.startswith("-") else 1
    letters = label.lstrip("+-")
    return sign * reduce(np.kron, [MATS[c] for c in letters], np.ones((1, 1)))


def projector_state(labels: list[str]) -> np.ndarray:
    """Joint +1 eigenvector of the given generators, phase fixed at the first nonzero entry.

    The product of ``(I + g)/2`` is the rank-one projector onto the state; its
    largest column is proportional to the state.
    """
    dim = 1 << len(labels[0].lstrip("+-"))
    proj = np.eye(dim, dtype=complex)
    for lab in labels:
        proj = proj @ (np.eye(dim) + textbook_dense(lab)) / 2
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    v = col / np.linalg.norm(col)
    first = np.flatnonzero(np.abs(v) > 1e-9)[0]
    return v * (abs(v[first]) / v[first])


def scan_lagrangians(n: int) -> set[frozenset[int]]:
    """Every n-dimensional isotropic subspace of Z_2^(2n), as a set of vectors.

    Brute force over all n-tuples of nonzero vectors; vectors are ``(p << n) | q``.
    """
    mask = (1 << n) - 1
    found = set()
    for vecs in itertools.combinations(range(1, 1 << (2 * n)), n):
        if gf2.rank_words(vecs) != n:
            continue
        if any(symplectic_form(a >> n, a & mask, b >> n, b & mask) for a, b in itertools.combinations(vecs, 2)):
            continue
        span = {0}
        for v in vecs:
            span |= {s ^ v for s in span}
        found.add(frozenset(span))
    return found


@pytest.fixture(scope="session")
def ordering():
    return _ordering


@pytest.fixture(scope="session")
def basis():
    return _basis


# PASS/FAIL/SKIP lines from the acceptance gate, echoed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
