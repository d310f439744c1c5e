from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from stabdep.extent import (
    Decomposition,
    ExtentError,
    NotNormalised,
    SolverGuard,
    SolverParams,
    computational_decomposition,
    evaluate_decomposition,
    extent,
    extent_dictionary,
    minimize_l1_affine,
    rational_hint,
)
from stabdep.stabiliser import amplitudes
from stabdep.states import ckz_magic, dicke, ghz, t_tensor

R = 2**-0.5
SEC2_PI8 = 1 / math.cos(math.pi / 8) ** 2  # 1.1715728752...

# Values from an independent interior-point SOCP solve of min ||x||_1 s.t. Ex = psi
# over dictionaries written out by hand (n = 1) or built from textbook projectors.
ORACLE = {
    ("t", 1): 1.1715728752538097,
    ("t", 2): 1.3725830020304777,
    ("czk", 2): 1.0,
    ("czk", 3): 16 / 9,
    ("dicke", 3, 1): 4 / 3,
    ("t", 3): 1.6080810,
    ("t", 4): 1.8839841,
    ("czk", 4): 9 / 4,
    ("dicke", 4, 1): 16 / 9,
    ("dicke", 4, 2): 4 / 3,
    ("dicke", 4, 3): 16 / 9,
}


def _haar(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


class TestDecomposition:
    def test_computational_examples(self, ordering):
        o = ordering(2)
        d = computational_decomposition(np.eye(4)[0], o)
        assert np.flatnonzero(d.coefficients).tolist() == [0]
        d = computational_decomposition(dicke(2, 1), o)
        np.testing.assert_allclose(d.coefficients[:4], [0, R, R, 0])
        assert not d.coefficients[4:].any()
        d = computational_decomposition(t_tensor(1), ordering(1))
        np.testing.assert_allclose(d.coefficients[:2], [R, R * np.exp(1j * np.pi / 4)])

    def test_rejects_unnormalised(self, ordering):
        with pytest.raises(NotNormalised):
            computational_decomposition(np.array([1.0, 1.0]), ordering(1))

    def test_evaluate_roundtrip(self, ordering):
        o = ordering(3)
        psi = _haar(3, 0)
        back = evaluate_decomposition(computational_decomposition(psi, o), o)
        np.testing.assert_allclose(back, psi, atol=1e-12)

    def test_unit_column_plus(self, ordering):
        o = ordering(1)
        e = np.zeros(6, dtype=complex)
        e[2] = 1
        np.testing.assert_allclose(evaluate_decomposition(Decomposition(1, e), o), [R, R])

    def test_basis_image_is_dependency(self, ordering, basis):
        o, B = ordering(3), basis(3)
        c = computational_decomposition(_haar(3, 1), o)
        rng = np.random.default_rng(2)
        x = rng.normal(size=B.num_cols) + 1j * rng.normal(size=B.num_cols)
        moved = Decomposition(3, c.coefficients + B.to_csc() @ x)
        diff = evaluate_decomposition(moved, o) - evaluate_decomposition(c, o)
        assert np.max(np.abs(diff)) < 1e-10


class TestRationalHint:
    def test_examples(self):
        assert rational_hint(1.5625) == Fraction(25, 16)
        assert rational_hint(1.6000003) == Fraction(8, 5)
        assert rational_hint(1.171573) is None
        assert rational_hint(8 / 3 + 1e-9) == Fraction(8, 3)


class TestSolvers:
    @pytest.mark.parametrize("method", ["basis", "dictionary"])
    def test_stabiliser_inputs(self, method):
        for psi in (np.array([R, -1j * R]), np.array([1.0, 0.0]), ghz(3), dicke(2, 1)):
            assert extent(psi, method).xi == pytest.approx(1, abs=1e-6)

    @pytest.mark.parametrize("method", ["basis", "dictionary"])
    def test_t_state(self, method):
        res = extent(t_tensor(1), method)
        assert res.xi == pytest.approx(SEC2_PI8, abs=1e-4)
        assert res.converged and res.rational_hint is None

    @pytest.mark.parametrize(
        "key,psi,tol",
        [
            (("t", 2), t_tensor(2), 1e-3),
            (("czk", 2), ckz_magic(2), 1e-6),
            (("czk", 3), ckz_magic(3), 1e-3),
            (("dicke", 3, 1), dicke(3, 1), 1e-4),
            (("t", 3), t_tensor(3), 1e-4),
        ],
    )
    def test_oracle_values(self, key, psi, tol):
        rd = extent(psi, "dictionary")
        rb = extent(psi, "basis")
        assert rd.xi == pytest.approx(ORACLE[key], abs=tol)
        assert abs(rd.xi - rb.xi) < 1e-4

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "key,psi",
        [
            (("t", 4), t_tensor(4)),
            (("dicke", 4, 1), dicke(4, 1)),
            (("dicke", 4, 2), dicke(4, 2)),
        ],
    )
    def test_oracle_values_n4(self, key, psi):
        rd = extent(psi, "dictionary")
        rb = extent(psi, "basis")
        assert rd.xi == pytest.approx(ORACLE[key], abs=1e-6)
        assert abs(rd.xi - rb.xi) < 1e-6

    @pytest.mark.slow
    def test_ghz4(self):
        assert extent(ghz(4), "basis").xi == pytest.approx(1, abs=1e-6)

    def test_ccz_hint(self):
        assert extent(ckz_magic(3), "dictionary").rational_hint == Fraction(16, 9)

    def test_random_states_agree(self):
        for n in (1, 2, 3):
            for seed in range(3):
                psi = _haar(n, seed)
                assert abs(extent(psi, "basis").xi - extent(psi, "dictionary").xi) < 1e-4

    def test_random_stabiliser_states(self, ordering):
        rng = np.random.default_rng(4)
        for n in (1, 2, 3):
            o = ordering(n)
            for s in rng.integers(0, o.num_states, 50):
                psi = amplitudes(o.check_matrix(int(s))).to_dense() * np.exp(2j * np.pi * rng.random())
                assert extent(psi, "basis").xi == pytest.approx(1, abs=1e-6)

    def test_xi_at_least_one(self):
        for seed in range(5):
            assert extent(_haar(2, seed), "basis").xi >= 1 - 1e-9

    def test_solution_is_decomposition(self, ordering):
        o = ordering(3)
        psi = ckz_magic(3)
        res = extent(psi, "basis")
        np.testing.assert_allclose(evaluate_decomposition(res.decomposition, o), psi, atol=1e-8)
        assert np.abs(res.decomposition.coefficients).sum() == pytest.approx(res.l1_value)

    def test_history_monotone_and_residuals(self):
        params = SolverParams(gap_tol=0)
        res = extent(t_tensor(3), "basis", params)
        h = np.array(res.history)
        assert np.all(np.diff(h[100:]) <= 0)
        assert res.converged and res.stop_reason == "residual"
        size = 1080
        bound = params.eps_abs * math.sqrt(size) + params.eps_rel * 2 * res.l1_value
        assert res.primal_residual < bound

    @pytest.mark.parametrize("method", ["basis", "dictionary"])
    def test_gap_certificate(self, method):
        for psi in (t_tensor(3), dicke(3, 1), _haar(3, 5)):
            res = extent(psi, method)
            assert res.stop_reason == "gap"
            assert res.lower_bound <= res.l1_value + 1e-12
            assert res.l1_value - res.lower_bound <= 1e-6 * res.l1_value

    def test_bound_is_valid_without_gap_stop(self):
        # the bound never exceeds the oracle optimum, even far from convergence
        for iters in (25, 50, 200):
            res = extent(t_tensor(3), "basis", SolverParams(max_iter=iters, gap_tol=0))
            assert res.lower_bound**2 <= ORACLE[("t", 3)] + 1e-7  # oracle kept to 7 decimals

    def test_max_iter_flag(self):
        res = extent(t_tensor(3), "basis", SolverParams(max_iter=5))
        assert not res.converged and res.iterations == 5
        assert res.stop_reason == "max_iter"
        assert res.xi >= SEC2_PI8**3 - 1e-6

    def test_json(self):
        params = SolverParams()
        out = extent(t_tensor(1), "basis", params).to_json("t:1", 1, params)
        assert set(out) >= {
            "state_spec", "n", "xi", "l1", "rational_hint", "iterations",
            "primal_residual", "dual_residual", "wall_time_s", "params",
            "stop_reason", "xi_lower_bound",
        }
        assert out["params"]["rho"] == 1.0

    def test_guards_and_errors(self, ordering, basis):
        with pytest.raises(SolverGuard):
            extent_dictionary(np.eye(32)[0], 5)
        with pytest.raises(ExtentError):
            extent(np.ones(3) / math.sqrt(3))
        with pytest.raises(ExtentError):
            extent(t_tensor(1), "simplex")
        with pytest.raises(ExtentError):
            minimize_l1_affine(computational_decomposition(t_tensor(2), ordering(2)), basis(3))
        with pytest.raises(ExtentError):
            SolverParams(rho=0)
        with pytest.raises(ExtentError):
            SolverParams(over_relaxation=2.0)
        with pytest.raises(ExtentError):
            SolverParams(gap_tol=-1e-3)


class TestIndependentOracle:
    """Live check against an interior-point SOCP solve, when cvxpy is installed."""

    def test_n1_hand_dictionary(self):
        cp = pytest.importorskip("cvxpy")
        # the six single-qubit stabiliser states, written out by hand
        S = np.array([[1, 0], [0, 1], [R, R], [R, -R], [R, 1j * R], [R, -1j * R]]).T
        psi = t_tensor(1)
        x = cp.Variable(6, complex=True)
        prob = cp.Problem(cp.Minimize(cp.norm1(x)), [S @ x == psi])
        prob.solve(solver="CLARABEL")
        assert prob.value**2 == pytest.approx(ORACLE[("t", 1)], abs=1e-6)
        assert extent(psi, "basis").xi == pytest.approx(prob.value**2, abs=1e-5)
