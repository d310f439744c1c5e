"""Self-check suites shared by ``stabdep verify`` and the acceptance tests.

Each suite returns a :class:`SuiteResult` with a one-line summary and a
JSON-friendly ``details`` dict; none of them raise on a failed check.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .basis import canonical_dependency, triangular_solve, verify_columns, verify_structure
from .enumeration import (
    enumerate_lagrangians,
    lagrangian_count,
    lagrangians_by_closure,
    packed_words,
    state_count,
)
from .extent import DICTIONARY_MAX_QUBITS, SolverParams, _basis, _ordering, extent
from .stabiliser import amplitudes
from .states import ckz_magic, dicke, ghz, t_tensor

SUITES = ("pauli", "counts", "columns", "triangular", "solve", "extent-cross")
PAULI_RANDOM_SAMPLES = 10_000
CLOSURE_MAX_QUBITS = 3
SOLVE_SAMPLES = 100
SOLVE_TOL = 1e-10
CROSS_TOL = 1e-4


@dataclass
class SuiteResult:
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "summary": self.summary,
            "seconds": round(self.seconds, 3),
            "details": self.details,
        }


# --- pauli --------------------------------------------------------------------

def _all_paulis(n: int):
    for p, q, phase in itertools.product(range(1 << n), range(1 << n), range(4)):
        yield pauli.PhasedPauli(p, q, n, phase)


def _random_pauli(n: int, rng: np.random.Generator) -> pauli.PhasedPauli:
    return pauli.PhasedPauli(int(rng.integers(1 << n)), int(rng.integers(1 << n)), n, int(rng.integers(4)))


def _action_ok(a: pauli.PhasedPauli, da: np.ndarray) -> bool:
    for z in range(1 << a.n):
        k, z2 = pauli.apply_to_basis_state(a, z)
        col = np.zeros(1 << a.n, dtype=complex)
        col[z2] = pauli.I_POWERS[k]
        if not np.array_equal(da[:, z], col):
            return False
    return True


def pauli_mismatches(a: pauli.PhasedPauli, b: pauli.PhasedPauli, dense=pauli.dense) -> list[str]:
    """Compare the product and commutation of ``a, b`` with dense matrices."""
    da, db = dense(a), dense(b)
    dab = da @ db
    out = []
    if not np.array_equal(dense(a * b), dab):
        out.append(f"product {a.label()} * {b.label()}")
    if pauli.commutes(a, b) != np.array_equal(dab, db @ da):
        out.append(f"commutation {a.label()}, {b.label()}")
    return out


def suite_pauli(n: int, seed: int = 0) -> SuiteResult:
    """All operator pairs for each ``m <= min(n, 2)``; random pairs at ``n = 3``.

    Phases only rescale products, so the right factor runs over unsigned
    operators while the left factor covers every phase.
    """
    bad: list[str] = []
    checked = 0
    for m in range(1, min(n, 2) + 1):
        ops = list(_all_paulis(m))
        table = {(a.p, a.q, a.phase): pauli.dense(a) for a in ops}

        def cached(a: pauli.PhasedPauli) -> np.ndarray:
            return table[(a.p, a.q, a.phase)]

        for a in ops:
            if not _action_ok(a, table[(a.p, a.q, a.phase)]):
                bad.append(f"action of {a.label()}")
            for b in ops:
                if b.phase == 0:
                    bad.extend(pauli_mismatches(a, b, cached))
                    checked += 1
    if n >= 3:
        m = 3
        rng = np.random.default_rng(seed)
        for _ in range(PAULI_RANDOM_SAMPLES):
            a, b = _random_pauli(m, rng), _random_pauli(m, rng)
            bad.extend(pauli_mismatches(a, b))
            if not _action_ok(a, pauli.dense(a)):
                bad.append(f"action of {a.label()}")
            checked += 1
    mode = "exhaustive" if n <= 2 else "exhaustive n<=2 + random n=3"
    summary = f"{checked - len(bad)}/{checked} operator pairs exact ({mode})"
    return SuiteResult("pauli", not bad, summary, {"mode": mode, "checked": checked, "failures": bad[:20]})


# --- counts -------------------------------------------------------------------

def suite_counts(n: int) -> SuiteResult:
    rows = []
    ok = True
    for m in range(1, n + 1):
        lags = enumerate_lagrangians(m)
        lags.validate()
        row = {
            "n": m,
            "lagrangians": len(lags),
            "expected": lagrangian_count(m),
            "states": len(lags) << m,
            "expected_states": state_count(m),
        }
        if m <= CLOSURE_MAX_QUBITS:
            closure = lagrangians_by_closure(m)
            row["closure_match"] = closure == {packed_words(m, lags.rows(i)) for i in range(len(lags))}
            ok &= row["closure_match"]
        ok &= row["lagrangians"] == row["expected"] and row["states"] == row["expected_states"]
        rows.append(row)
    last = rows[-1]
    summary = f"lagrangians={last['lagrangians']} states={last['states']} (n=1..{n} match)"
    if not ok:
        summary = "count mismatch"
    return SuiteResult("counts", ok, summary, {"rows": rows})


# --- basis --------------------------------------------------------------------

def suite_columns(n: int) -> SuiteResult:
    B = _basis(n)
    bad = verify_columns(B, _ordering(n))
    good = B.num_cols - len(bad)
    return SuiteResult(
        "columns", not bad, f"{good}/{B.num_cols} columns exact", {"n": n, "failed_columns": bad[:20]}
    )


def suite_triangular(n: int) -> SuiteResult:
    ordering = _ordering(n)
    B = _basis(n)
    problems = verify_structure(B, ordering)
    summary = f"{B.num_rows}x{B.num_cols}, nnz={B.nnz}, unit diagonal, lower triangular"
    if problems:
        summary = "; ".join(problems)
    return SuiteResult("triangular", not problems, summary, {"n": n, "problems": problems})


def suite_solve(n: int, samples: int = SOLVE_SAMPLES, seed: int = 0) -> SuiteResult:
    """Forward substitution on random canonical dependencies."""
    ordering = _ordering(n)
    B = _basis(n)
    rng = np.random.default_rng(seed)
    picks = rng.integers(ordering.num_computational, ordering.num_states, samples)
    worst = 0.0
    for s in picks:
        dep = canonical_dependency(ordering, int(s))
        res = triangular_solve(B, dep.entries)
        worst = max(worst, res.residual_norm)
    ok = worst < SOLVE_TOL
    return SuiteResult(
        "solve", ok, f"{samples} dependencies, max residual {worst:.2e}", {"n": n, "max_residual": worst}
    )


# --- extent -------------------------------------------------------------------

_ZERO = np.array([1.0, 0.0])
_PLUS = np.array([1.0, 1.0]) / np.sqrt(2)


def _product_fill(n: int) -> dict[str, np.ndarray]:
    """Products of smaller benchmark states with stabiliser factors."""
    m = n - 1
    return {
        f"t:{m} x |0>": np.kron(t_tensor(m), _ZERO),
        f"czk:{m} x |+>": np.kron(ckz_magic(m), _PLUS),
        f"t:{m - 1} x ghz:2": np.kron(t_tensor(m - 1), ghz(2)),
        f"dicke:{m},1 x |0>": np.kron(dicke(m, 1), _ZERO),
        f"t:1 x dicke:{m},1": np.kron(t_tensor(1), dicke(m, 1)),
    }


def extent_test_states(n: int, count: int = 10, seed: int = 0) -> dict[str, np.ndarray]:
    """Named benchmark states, a fill up to ``count - 2``, then stabiliser states.

    The fill is Haar random for ``n <= 3``. From ``n = 4`` generic states need
    on the order of 10^5 iterations, so the fill uses structured products.
    """
    states: dict[str, np.ndarray] = {f"t:{n}": t_tensor(n), f"ghz:{n}": ghz(n)}
    if n >= 2:
        states[f"czk:{n}"] = ckz_magic(n)
        for k in range(1, n):
            states[f"dicke:{n},{k}"] = dicke(n, k)
    rng = np.random.default_rng(seed)
    ordering = _ordering(n)
    if n >= 4:
        for name, psi in _product_fill(n).items():
            if len(states) >= count - 2:
                break
            states[name] = psi
    while len(states) < count - 2:
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        states[f"random{len(states)}"] = v / np.linalg.norm(v)
    while len(states) < count:
        s = int(rng.integers(ordering.num_computational, ordering.num_states))
        states[f"stabiliser{s}"] = amplitudes(ordering.check_matrix(s)).to_dense()
    return states


def suite_extent_cross(n: int, params: SolverParams | None = None, count: int = 10) -> SuiteResult:
    if n > DICTIONARY_MAX_QUBITS:
        return SuiteResult("extent-cross", False, f"dictionary method needs n <= {DICTIONARY_MAX_QUBITS}")
    rows = []
    worst = 0.0
    converged = True
    for name, psi in extent_test_states(n, count).items():
        rb = extent(psi, "basis", params)
        rd = extent(psi, "dictionary", params)
        delta = abs(rb.xi - rd.xi)
        worst = max(worst, delta)
        converged &= rb.converged and rd.converged
        rows.append({"state": name, "basis": rb.xi, "dictionary": rd.xi, "delta": delta})
    ok = worst < CROSS_TOL and converged
    summary = f"{len(rows)} states, max |basis - dictionary| = {worst:.2e}"
    return SuiteResult("extent-cross", ok, summary, {"n": n, "states": rows, "converged": converged})


_RUNNERS = {
    "pauli": suite_pauli,
    "counts": suite_counts,
    "columns": suite_columns,
    "triangular": suite_triangular,
    "solve": suite_solve,
    "extent-cross": suite_extent_cross,
}


def run_suite(name: str, n: int) -> SuiteResult:
    t0 = time.perf_counter()
    result = _RUNNERS[name](n)
    result.seconds = time.perf_counter() - t0
    return result


def run_suites(names: str | list[str], n: int) -> list[SuiteResult]:
    if names == "all":
        names = [s for s in SUITES if s != "extent-cross" or n <= DICTIONARY_MAX_QUBITS]
    elif isinstance(names, str):
        names = [names]
    return [run_suite(name, n) for name in names]
