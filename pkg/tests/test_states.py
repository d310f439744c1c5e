from __future__ import annotations

import math

import numpy as np
import pytest

from stabdep.states import (
    NormError,
    StateError,
    StateSpecError,
    ckz_magic,
    dicke,
    from_file,
    ghz,
    parse_state_spec,
    t_tensor,
)

R = 2**-0.5


class TestFamilies:
    def test_dicke(self):
        np.testing.assert_allclose(dicke(2, 1), [0, R, R, 0])
        np.testing.assert_allclose(dicke(3, 0), np.eye(8)[0])
        v = dicke(6, 3)
        assert np.count_nonzero(v) == math.comb(6, 3)
        assert v[0b000111] == pytest.approx(1 / math.sqrt(20))
        with pytest.raises(StateError):
            dicke(3, 4)

    def test_dicke_qubit_order(self):
        # weight-one strings 001, 010, 100 are indices 1, 2, 4
        assert set(np.flatnonzero(dicke(3, 1))) == {1, 2, 4}

    def test_ckz(self):
        np.testing.assert_allclose(ckz_magic(2), [0.5, 0.5, 0.5, -0.5])
        v = ckz_magic(3)
        np.testing.assert_allclose(np.abs(v), 2**-1.5)
        assert v[7] < 0 and np.all(v[:7] > 0)
        assert ckz_magic(6)[63] == pytest.approx(-1 / 8)

    def test_t(self):
        np.testing.assert_allclose(t_tensor(1), [R, R * np.exp(1j * np.pi / 4)])
        assert t_tensor(2)[0b11] == pytest.approx(0.5j)

    def test_ghz(self):
        np.testing.assert_allclose(ghz(3), [R, 0, 0, 0, 0, 0, 0, R])

    @pytest.mark.parametrize("v", [dicke(5, 2), ckz_magic(4), t_tensor(4), ghz(6)])
    def test_unit_norm(self, v):
        assert np.linalg.norm(v) == pytest.approx(1, abs=1e-14)


class TestFile:
    def test_bell(self, tmp_path):
        p = tmp_path / "bell.txt"
        p.write_text("# Bell\n00 0.7071067812 0\n11 0.7071067812 0\n")
        np.testing.assert_allclose(from_file(p), [R, 0, 0, R], atol=1e-12)

    def test_complex_and_missing(self, tmp_path):
        p = tmp_path / "psi.txt"
        p.write_text("0 0.7071067812\n1 0 0.7071067812  # |+i>\n")
        np.testing.assert_allclose(from_file(p), [R, 1j * R], atol=1e-12)

    def test_norm_guard(self, tmp_path):
        p = tmp_path / "half.txt"
        p.write_text("00 0.5 0\n")
        with pytest.raises(NormError):
            from_file(p)
        np.testing.assert_allclose(from_file(p, normalize=True), [1, 0, 0, 0])

    @pytest.mark.parametrize(
        "text",
        ["", "0x 1 0\n", "00 1 0\n1 0 0\n", "00 a 0\n", "00 1 0\n00 0 1\n", "00\n"],
    )
    def test_malformed(self, tmp_path, text):
        p = tmp_path / "bad.txt"
        p.write_text(text)
        with pytest.raises(StateError):
            from_file(p)


class TestSpec:
    def test_parse(self):
        s = parse_state_spec("dicke:6,3")
        assert (s.family, s.params, s.n, str(s)) == ("dicke", (6, 3), 6, "dicke:6,3")
        assert parse_state_spec("czk:6").build()[63] < 0
        assert parse_state_spec("file:x.txt").path == "x.txt"

    @pytest.mark.parametrize("text", ["dicke", "foo:3", "dicke:3", "dicke:3,5", "czk:1", "t:0", "t:x", "ghz:40", "file:"])
    def test_rejects(self, text):
        with pytest.raises(StateSpecError):
            parse_state_spec(text)

    def test_file_spec_has_no_n(self):
        with pytest.raises(StateSpecError):
            parse_state_spec("file:psi.txt").n
