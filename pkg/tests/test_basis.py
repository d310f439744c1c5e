from __future__ import annotations

import numpy as np
import pytest
from conftest import projector_state

from stabdep.basis import (
    CODE_ONE,
    BasisFormatError,
    BasisResourceGuard,
    ComputationalState,
    build_basis,
    canonical_dependency,
    decode,
    exact_column_sum,
    export_basis,
    import_basis,
    split,
    triangular_solve,
    verify_columns,
    verify_structure,
)
from stabdep.stabiliser import CheckMatrix, amplitudes, support

R = 2**-0.5


def _dense(cm: CheckMatrix) -> np.ndarray:
    labels = [cm.generator(j).label().replace("+", "") for j in range(cm.n)]
    return projector_state(labels)


def test_decode():
    assert decode(CODE_ONE) == 1
    np.testing.assert_allclose([decode(k) for k in range(4)], [-R, -1j * R, R, 1j * R])
    with pytest.raises(BasisFormatError):
        decode(7)


class TestSplit:
    def test_plus(self):
        res = split(CheckMatrix.from_labels(["X"]))
        kids = res.children()
        assert [support(k).elements() for k in kids] == [[0], [1]]
        assert res.tau_codes == (0, 0)

    def test_plus_i(self):
        res = split(CheckMatrix.from_labels(["Y"]))
        assert res.anchors == (0, 1)
        assert res.tau_codes == (0, 1)

    def test_bell(self):
        res = split(CheckMatrix.from_labels(["XX", "ZZ"]))
        assert sorted(res.anchors) == [0b00, 0b11]
        assert res.tau_codes == (0, 0)

    def test_computational_rejected(self):
        with pytest.raises(ComputationalState):
            split(CheckMatrix.from_labels(["Z"]))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_splitting_identity_dense(self, ordering, n):
        """|s> = 2^(-1/2) (i^k0 |t0> + i^k1 |t1>) against projector eigenvectors."""
        o = ordering(n)
        for s in range(o.num_computational, o.num_states):
            cm = o.check_matrix(s)
            res = split(cm)
            t0, t1 = (_dense(k) for k in res.children())
            recon = R * (1j ** res.tau_codes[0] * t0 + 1j ** res.tau_codes[1] * t1)
            np.testing.assert_allclose(recon, _dense(cm), atol=1e-12)
            half = len(support(cm)) // 2
            assert all(len(support(k)) == half for k in res.children())


class TestBuild:
    def test_n1_columns(self, basis):
        B = basis(1)
        assert (B.num_rows, B.num_cols, B.nnz) == (6, 4, 12)
        assert [B.column(j) for j in range(4)] == [
            [(0, 0), (1, 0), (2, 255)],
            [(0, 0), (1, 2), (3, 255)],
            [(0, 0), (1, 1), (4, 255)],
            [(0, 0), (1, 3), (5, 255)],
        ]
        dense = B.to_csc().toarray()
        np.testing.assert_allclose(dense[:, 2], [-R, -1j * R, 0, 0, 1, 0])
        np.testing.assert_allclose(dense[:, 3], [-R, 1j * R, 0, 0, 0, 1])

    @pytest.mark.parametrize("n,shape", [(2, (60, 56)), (3, (1080, 1072)), (4, (36720, 36704))])
    def test_dimensions(self, basis, n, shape):
        B = basis(n)
        assert (B.num_rows, B.num_cols) == shape
        assert B.nnz == 3 * shape[1]

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_columns_exact(self, ordering, basis, n):
        assert verify_columns(basis(n), ordering(n)) == []

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_columns_vanish_in_floats(self, ordering, basis, n):
        """Second route: dictionary of projector eigenvectors times B is zero."""
        o = ordering(n)
        E = np.column_stack([_dense(o.check_matrix(s)) for s in range(o.num_states)])
        assert np.max(np.abs(E @ basis(n).to_csc().toarray())) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_structure(self, ordering, basis, n):
        assert verify_structure(basis(n), ordering(n)) == []

    def test_column_rank_matches_ordering(self, ordering, basis):
        o, B = ordering(3), basis(3)
        assert np.array_equal(B.column_ranks(), o.state_ranks()[8:])

    def test_exact_sum_detects_corruption(self, ordering, basis):
        o, B = ordering(2), basis(2)
        codes = B.codes.copy()
        codes[10, 0] = (codes[10, 0] + 1) % 4
        broken = type(B)(B.n, B.num_rows, B.num_cols, B.rows, codes)
        assert verify_columns(broken, o) == [10]
        table = lambda r: amplitudes(o.check_matrix(r))  # noqa: E731
        assert exact_column_sum(B, 10, table) == {}

    def test_threads_give_identical_basis(self, ordering, basis):
        assert build_basis(ordering(3), threads=2) == basis(3)

    def test_memory_guard(self, ordering):
        with pytest.raises(BasisResourceGuard):
            build_basis(ordering(3), max_mem=1000)


class TestCanonicalDependency:
    def test_examples(self, ordering):
        o = ordering(1)
        plus = canonical_dependency(o, 2).entries
        assert plus == pytest.approx({2: 1, 0: -R, 1: -R})
        minus_i = canonical_dependency(o, 5).entries
        assert minus_i == pytest.approx({5: 1, 0: -R, 1: 1j * R})

    def test_bell(self, ordering):
        o = ordering(2)
        lags = o.lagrangians
        bell = CheckMatrix.from_labels(["XX", "ZZ"])
        idx = o.state_index(lags.index_of(bell.rows), bell.lambdas)
        assert canonical_dependency(o, idx).entries == pytest.approx({idx: 1, 0: -R, 3: -R})

    def test_rejects_computational(self, ordering):
        with pytest.raises(ComputationalState):
            canonical_dependency(ordering(1), 0)


class TestTriangularSolve:
    def test_unit_columns(self, basis):
        B = basis(2)
        dense = B.to_csc().toarray()
        for j in (0, 17, 55):
            res = triangular_solve(B, dense[:, j])
            np.testing.assert_allclose(res.x, np.eye(B.num_cols)[j], atol=1e-14)
            assert res.residual_norm < 1e-14

    def test_plus_i(self, ordering, basis):
        res = triangular_solve(basis(1), canonical_dependency(ordering(1), 4).entries)
        np.testing.assert_allclose(res.x, [0, 0, 1, 0], atol=1e-15)
        assert res.residual_norm < 1e-15

    def test_random_n3(self, ordering, basis):
        o, B = ordering(3), basis(3)
        csc = B.to_csc()
        rng = np.random.default_rng(11)
        for s in rng.integers(8, o.num_states, 100):
            dep = canonical_dependency(o, int(s))
            res = triangular_solve(B, dep.entries)
            assert res.residual_norm < 1e-10
            np.testing.assert_allclose(csc @ res.x, dep.to_dense(o.num_states), atol=1e-10)

    def test_wrong_length(self, basis):
        with pytest.raises(Exception):
            triangular_solve(basis(1), np.zeros(3))


class TestFiles:
    @pytest.mark.parametrize("fmt", ["bin", "csv"])
    def test_roundtrip(self, basis, tmp_path, fmt):
        B = basis(2)
        path = tmp_path / f"b2.{fmt}"
        export_basis(B, path, fmt)
        assert import_basis(path) == B

    def test_csv_rows(self, basis, tmp_path):
        path = tmp_path / "b1.csv"
        export_basis(basis(1), path, "csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "col,row,code"
        assert len(lines) - 1 == 12

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"XXXX" + bytes(64))
        with pytest.raises(BasisFormatError):
            import_basis(path)

    def test_truncated(self, basis, tmp_path):
        path = tmp_path / "b2.bin"
        export_basis(basis(2), path)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(BasisFormatError):
            import_basis(path)

    def test_bad_code(self, basis, tmp_path):
        path = tmp_path / "b1.csv"
        export_basis(basis(1), path, "csv")
        path.write_text(path.read_text().replace("0,2,255", "0,2,9"))
        with pytest.raises(BasisFormatError):
            import_basis(path)
