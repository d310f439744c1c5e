"""Benchmark target states and the amplitude-file reader.

Bitstrings are written with qubit 1 leftmost, and qubit 1 is the most
significant bit of the vector index.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FILE_NORM_TOL = 1e-8


class StateError(ValueError):
    pass


class StateSpecError(StateError):
    pass


class NormError(StateError):
    pass


def _weights(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    w = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        w += ((idx >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    return w


def dicke(n: int, k: int) -> np.ndarray:
    """Uniform superposition of the weight-``k`` bitstrings."""
    if n < 1 or not 0 <= k <= n:
        raise StateError(f"dicke needs 0 <= k <= n, got n={n}, k={k}")
    v = (_weights(n) == k).astype(complex)
    return v / math.sqrt(math.comb(n, k))


def ckz_magic(n: int) -> np.ndarray:
    """``C^{n-1}Z |+>^n``: uniform amplitudes, sign flip on ``1...1``."""
    if n < 2:
        raise StateError("ckz_magic needs n >= 2")
    v = np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)
    v[-1] = -v[-1]
    return v


def t_tensor(n: int) -> np.ndarray:
    """``|T>^n`` with ``|T> = (|0> + e^{i pi/4}|1>)/sqrt(2)``."""
    if n < 1:
        raise StateError("t_tensor needs n >= 1")
    return 2.0 ** (-n / 2) * np.exp(1j * np.pi / 4 * _weights(n))


def ghz(n: int) -> np.ndarray:
    if n < 1:
        raise StateError("ghz needs n >= 1")
    v = np.zeros(1 << n, dtype=complex)
    v[0] = v[-1] = 2.0 ** -0.5
    return v


def _normalised(v: np.ndarray, normalize: bool, tol: float) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise NormError("state vector is zero")
    if abs(norm - 1.0) > tol and not normalize:
        raise NormError(f"state has norm {norm:.12g}; pass normalize to rescale")
    return v / norm


def from_file(path: str | os.PathLike, *, normalize: bool = False) -> np.ndarray:
    """Read ``bitstring re im`` lines; ``#`` starts a comment.

    Missing bitstrings have amplitude zero. Printed decimals never give an
    exactly unit vector, so norms within ``FILE_NORM_TOL`` of one are
    accepted and rescaled; anything further off needs ``normalize``.
    """
    n = None
    amps: dict[int, complex] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise StateError(f"{path}:{lineno}: expected 'bitstring re [im]'")
        bits = parts[0]
        if set(bits) - {"0", "1"}:
            raise StateError(f"{path}:{lineno}: bad bitstring {bits!r}")
        if n is None:
            n = len(bits)
        elif len(bits) != n:
            raise StateError(f"{path}:{lineno}: bitstring length {len(bits)} != {n}")
        try:
            re = float(parts[1])
            im = float(parts[2]) if len(parts) == 3 else 0.0
        except ValueError:
            raise StateError(f"{path}:{lineno}: bad amplitude") from None
        z = int(bits, 2)
        if z in amps:
            raise StateError(f"{path}:{lineno}: duplicate bitstring {bits}")
        amps[z] = complex(re, im)
    if n is None:
        raise StateError(f"{path}: no amplitudes")
    v = np.zeros(1 << n, dtype=complex)
    for z, a in amps.items():
        v[z] = a
    return _normalised(v, normalize, FILE_NORM_TOL)


@dataclass(frozen=True)
class StateSpec:
    """Parsed ``family:params`` string, e.g. ``dicke:6,3`` or ``file:psi.txt``."""

    family: str
    params: tuple[int, ...] = ()
    path: str | None = None

    @property
    def n(self) -> int:
        if self.family == "file":
            raise StateSpecError("n of a file state is only known after reading it")
        return self.params[0]

    def __str__(self) -> str:
        if self.family == "file":
            return f"file:{self.path}"
        return f"{self.family}:{','.join(map(str, self.params))}"

    def build(self, *, normalize: bool = False) -> np.ndarray:
        if self.family == "file":
            return from_file(self.path, normalize=normalize)
        return _FAMILIES[self.family][0](*self.params)


_FAMILIES = {
    "dicke": (dicke, 2),
    "czk": (ckz_magic, 1),
    "t": (t_tensor, 1),
    "ghz": (ghz, 1),
}


def parse_state_spec(text: str) -> StateSpec:
    family, sep, rest = text.strip().partition(":")
    if not sep:
        raise StateSpecError(f"state spec {text!r} lacks ':'")
    if family == "file":
        if not rest:
            raise StateSpecError("file: needs a path")
        return StateSpec("file", (), rest)
    if family not in _FAMILIES:
        raise StateSpecError(f"unknown state family {family!r}")
    try:
        params = tuple(int(x) for x in rest.split(","))
    except ValueError:
        raise StateSpecError(f"bad parameters in {text!r}") from None
    if len(params) != _FAMILIES[family][1]:
        raise StateSpecError(f"{family} takes {_FAMILIES[family][1]} parameter(s)")
    n = params[0]
    low = 2 if family == "czk" else 1
    if not low <= n <= 32:
        raise StateSpecError(f"{family} needs {low} <= n <= 32, got {n}")
    if family == "dicke" and not 0 <= params[1] <= n:
        raise StateSpecError(f"dicke needs 0 <= k <= n, got k={params[1]}")
    return StateSpec(family, params)
