"""Stabiliser extent by l1 minimisation over stabiliser decompositions.

The decompositions of a state form the affine set ``{y : E y = psi}`` where
``E`` evaluates a formal combination of stabiliser states. Starting from the
computational-basis decomposition ``c``, the same set is ``c + range(B)``.
Both solve paths run one ADMM loop

    y <- P(z - u);  v <- a y + (1 - a) z + u;  z <- shrink(v, 1/rho);  u <- v - z

and differ only in how the projection ``P`` is computed:

* ``basis``: least squares against ``B``. Writing ``w = T x`` for the unit
  triangular block ``T`` turns ``Bx`` into ``[K w; w]`` with ``K = L T^-1``;
  the normal matrix ``I + K^H K`` is the identity plus a rank ``<= 2^n``
  term, inverted through the ``2^n x 2^n`` matrix ``I + K K^H``.
* ``dictionary``: the dense amplitude matrix ``E`` and its ``2^n x 2^n``
  Gram matrix. Never touches ``B``; kept as an oracle for small ``n``.

Every few iterations the ADMM iterate is also polished: restricted to the
support of ``z``, the nearest point of the affine set is a feasible
decomposition whose l1 norm is often the exact optimum long before the
residuals meet the stopping tolerance.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .basis import TripleBasis, build_basis
from .enumeration import StateOrdering, enumerate_lagrangians
from .stabiliser import amplitudes

NORM_TOL = 1e-12
POLISH_EVERY = 25
POLISH_SUPPORT_TOL = 1e-9
POLISH_RESIDUAL_TOL = 1e-10
DICTIONARY_MAX_QUBITS = 4
EVALUATE_MAX_QUBITS = 6


class ExtentError(ValueError):
    pass


class NotNormalised(ExtentError):
    pass


class SolverGuard(ExtentError):
    pass


@dataclass(frozen=True)
class SolverParams:
    rho: float = 1.0
    max_iter: int = 200_000
    eps_abs: float = 1e-8
    eps_rel: float = 1e-7
    over_relaxation: float = 1.6
    threads: int = 1
    gap_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.rho <= 0 or self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ExtentError("rho and tolerances must be positive")
        if self.gap_tol < 0:
            raise ExtentError("gap_tol must be non-negative (0 disables the gap test)")
        if self.max_iter < 1 or self.threads < 1:
            raise ExtentError("max_iter and threads must be positive")
        if not 1.0 <= self.over_relaxation <= 1.8:
            raise ExtentError("over_relaxation must lie in [1, 1.8]")


@dataclass
class Decomposition:
    """Coefficients over the global state order (dense storage)."""

    n: int
    coefficients: np.ndarray

    def support(self, tol: float = 1e-9) -> np.ndarray:
        return np.flatnonzero(np.abs(self.coefficients) > tol)


@dataclass
class ExtentResult:
    l1_value: float
    xi: float
    iterations: int
    primal_residual: float
    dual_residual: float
    wall_time: float
    converged: bool
    method: str
    lower_bound: float = 0.0
    stop_reason: str = "max_iter"
    decomposition: Decomposition | None = None
    rational_hint: Fraction | None = None
    history: list[float] = field(default_factory=list, repr=False)

    def to_json(self, state_spec: str, n: int, params: SolverParams) -> dict:
        return {
            "state_spec": state_spec,
            "n": n,
            "xi": self.xi,
            "l1": self.l1_value,
            "rational_hint": None if self.rational_hint is None else str(self.rational_hint),
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "wall_time_s": self.wall_time,
            "params": asdict(params),
            "method": self.method,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "xi_lower_bound": self.lower_bound**2,
        }


def rational_hint(value: float, max_denominator: int = 64, tol: float = 1e-6) -> Fraction | None:
    """Nearby fraction with a small denominator, if one is within ``tol``."""
    frac = Fraction(value).limit_denominator(max_denominator)
    if abs(float(frac) - value) < tol:
        return frac
    return None


def _check_state(psi: np.ndarray, n: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (1 << n,):
        raise ExtentError(f"state has length {psi.shape}, expected {1 << n}")
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise NotNormalised(f"state norm {np.linalg.norm(psi):.15g} is not 1")
    return psi


def computational_decomposition(psi: np.ndarray, ordering: StateOrdering) -> Decomposition:
    psi = _check_state(psi, ordering.n)
    c = np.zeros(ordering.num_states, dtype=complex)
    c[: ordering.num_computational] = psi
    return Decomposition(ordering.n, c)


def evaluate_decomposition(d: Decomposition, ordering: StateOrdering) -> np.ndarray:
    """``sum_s d(s) |s>`` as a dense vector."""
    if d.n > EVALUATE_MAX_QUBITS:
        raise SolverGuard(f"evaluation limited to n <= {EVALUATE_MAX_QUBITS}")
    out = np.zeros(1 << d.n, dtype=complex)
    for s in np.flatnonzero(d.coefficients):
        table = amplitudes(ordering.check_matrix(int(s)))
        out += d.coefficients[s] * table.to_dense()
    return out


# --- projections ----------------------------------------------------------------

class BasisProjector:
    """Projection onto ``c + range(B)`` using only the sparse basis.

    Columns are grouped by support rank; a rank-``r`` column's off-diagonal
    entries sit on rank ``r - 1`` rows (computational rows for ``r = 1``),
    so ``T^-1`` and ``T^-H`` are one sweep over the levels. Internally the
    columns are kept sorted by rank so each level is a slice.
    """

    def __init__(self, B: TripleBasis, c: np.ndarray):
        self.B = B
        self.c = c
        n = B.n
        self.offset = 1 << n
        ranks = B.column_ranks()
        order = np.argsort(ranks, kind="stable")
        self.perm = None if np.array_equal(order, np.arange(order.size)) else order
        bounds = np.searchsorted(ranks[order], np.arange(n + 2))
        self.levels = [slice(int(bounds[r]), int(bounds[r + 1])) for r in range(n + 1)]
        pos = np.empty(B.num_cols, dtype=np.int64)
        pos[order] = np.arange(B.num_cols)
        rows = B.rows[order, :2]
        vals = B.values()[order, :2]
        # blocks[r]: level-r columns -> level r-1 rows (computational for r = 1)
        self.blocks: list[sp.csr_matrix | None] = [None]
        for r in range(1, n + 1):
            lev = self.levels[r]
            width = lev.stop - lev.start
            if width == 0:
                break
            rr = rows[lev].ravel()
            if r == 1:
                height, ri = self.offset, rr
            else:
                prev = self.levels[r - 1]
                height, ri = prev.stop - prev.start, pos[rr - self.offset] - prev.start
            cc = np.repeat(np.arange(width), 2)
            self.blocks.append(sp.csr_matrix((vals[lev].ravel(), (ri, cc)), shape=(height, width)))
        self.blocks_h = [None if b is None else b.conj().T.tocsr() for b in self.blocks]
        small = self._small_gram()
        self.gram_minus_eye = small - np.eye(self.offset)
        self.gram = sla.cho_factor(small)

    def tri_inv(self, w: np.ndarray) -> np.ndarray:
        """``T^-1 w`` in rank-sorted coordinates."""
        x = np.empty_like(w)
        prev = None
        for r in range(len(self.blocks) - 1, 0, -1):
            lev = self.levels[r]
            xr = x[lev]
            xr[:] = w[lev]
            if prev is not None:
                xr -= self.blocks[r + 1] @ prev
            prev = xr
        return x

    def k_apply(self, w: np.ndarray) -> np.ndarray:
        """``K w = L T^-1 w``."""
        return self.blocks[1] @ self.tri_inv(w)[self.levels[1]]

    def k_adjoint(self, y: np.ndarray) -> np.ndarray:
        """``K^H y = T^-H L^H y``."""
        out = np.zeros(self.B.num_cols, dtype=complex)
        xr = self.blocks_h[1] @ y
        out[self.levels[1]] = xr
        for r in range(2, len(self.blocks)):
            xr = -(self.blocks_h[r] @ xr)
            out[self.levels[r]] = xr
        return out

    def _small_gram(self) -> np.ndarray:
        """``I + K K^H``, built column by column from ``K (K^H e_i)``."""
        m = self.offset
        G = np.eye(m, dtype=complex)
        for i in range(m):
            e = np.zeros(m, dtype=complex)
            e[i] = 1.0
            G[:, i] += self.k_apply(self.k_adjoint(e))
        return G

    def __call__(self, v: np.ndarray) -> np.ndarray:
        # With w = T x the least-squares step solves (I + K^H K) w = d2 + K^H d1;
        # Woodbury through G = I + K K^H leaves one K and one K^H product.
        off = self.offset
        d = v - self.c
        d1 = d[:off]
        d2 = d[off:] if self.perm is None else d[off:][self.perm]
        kd2 = self.k_apply(d2)
        t = d1 - sla.cho_solve(self.gram, kd2 + self.gram_minus_eye @ d1)
        w = d2 + self.k_adjoint(t)
        y = self.c.copy()
        y[:off] += kd2 + self.gram_minus_eye @ t
        if self.perm is None:
            y[off:] += w
        else:
            y[off:][self.perm] += w
        return y


def dictionary_matrix(ordering: StateOrdering) -> np.ndarray:
    """Dense ``2^n x |S|`` matrix of phase-normalised stabiliser states."""
    if ordering.n > DICTIONARY_MAX_QUBITS:
        raise SolverGuard(f"dictionary limited to n <= {DICTIONARY_MAX_QUBITS}")
    E = np.zeros((1 << ordering.n, ordering.num_states), dtype=complex)
    for s in range(ordering.num_states):
        E[:, s] = amplitudes(ordering.check_matrix(s)).to_dense()
    return E


class DictionaryProjector:
    """Projection onto ``{y : E y = psi}`` with the dense dictionary."""

    def __init__(self, E: np.ndarray, psi: np.ndarray):
        self.E = E
        self.EH = np.ascontiguousarray(E.conj().T)
        self.psi = psi
        self.gram = sla.cho_factor(E @ self.EH)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        resid = self.E @ v - self.psi
        return v - self.EH @ sla.cho_solve(self.gram, resid)


class SupportPolisher:
    """Nearest feasible decomposition supported on a given set of states.

    ``y_S = z_S - E_S^+ (E_S z_S - psi)`` with ``E_S`` the amplitude columns
    of the states in ``S``; any result with ``E_S y_S = psi`` is a valid
    decomposition whichever affine description the solver uses.
    """

    def __init__(self, psi: np.ndarray, column: Callable[[int], np.ndarray], max_support: int):
        self.psi = psi
        self.column = column
        self.max_support = max_support
        self._cols: dict[int, np.ndarray] = {}

    def __call__(self, z: np.ndarray) -> np.ndarray | None:
        S = np.flatnonzero(np.abs(z) > POLISH_SUPPORT_TOL)
        if S.size == 0 or S.size > self.max_support:
            return None
        ES = np.column_stack([self._col(int(s)) for s in S])
        resid = ES @ z[S] - self.psi
        step = np.linalg.lstsq(ES, resid, rcond=None)[0]
        yS = z[S] - step
        if np.linalg.norm(ES @ yS - self.psi) > POLISH_RESIDUAL_TOL:
            return None
        y = np.zeros_like(z)
        y[S] = yS
        return y

    def _col(self, s: int) -> np.ndarray:
        col = self._cols.get(s)
        if col is None:
            col = self.column(s)
            self._cols[s] = col
        return col


def ordering_polisher(psi: np.ndarray, ordering: StateOrdering) -> SupportPolisher:
    def column(s: int) -> np.ndarray:
        return amplitudes(ordering.check_matrix(s)).to_dense()

    return SupportPolisher(psi, column, max_support=4 << ordering.n)


# --- ADMM ---------------------------------------------------------------------------

def _shrink(v: np.ndarray, kappa: float) -> np.ndarray:
    """Complex soft threshold ``v * max(0, 1 - kappa / |v|)``."""
    scale = np.abs(v)
    np.maximum(scale, kappa, out=scale)
    np.divide(kappa, scale, out=scale)
    np.subtract(1.0, scale, out=scale)
    return v * scale


def admm_l1(
    project: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    params: SolverParams,
    method: str,
    n: int,
    polish: Callable[[np.ndarray], np.ndarray | None] | None = None,
) -> ExtentResult:
    """Minimise ``||y||_1`` over the affine set that ``project`` projects onto.

    Every projected iterate (and every polished one) is a feasible
    decomposition, so the reported value is the smallest l1 norm among them.

    The loop stops on the usual primal/dual residual test, or earlier once a
    lower bound certifies the best value to within ``gap_tol`` (relative).
    The bound comes from ``w``, the scaled dual ``rho u`` with its component
    along the solution directions projected out: ``<w, y>`` is then the same
    for every feasible ``y``, so ``||y||_1 >= Re<w, start> / max|w|``.
    """
    t0 = time.perf_counter()
    size = start.size
    root = np.sqrt(size)
    a = params.over_relaxation
    kappa = 1.0 / params.rho
    z = start.copy()
    u = np.zeros_like(z)
    best_y = start.copy()
    best = float(np.abs(start).sum())
    lower = 0.0
    history: list[float] = []
    r_norm = s_norm = np.inf
    reason = "max_iter"
    it = 0
    for it in range(1, params.max_iter + 1):
        y = project(z - u)
        val = float(np.abs(y).sum())
        if val < best:
            best, best_y = val, y
        # v = a y + (1 - a) z + u;  z <- shrink(v);  u <- v - z
        v = y - z
        v *= a
        v += z
        v += u
        z_old = z
        z = _shrink(v, kappa)
        u = v
        u -= z
        if it % POLISH_EVERY == 0:
            if polish is not None:
                yp = polish(z)
                if yp is not None:
                    pval = float(np.abs(yp).sum())
                    if pval < best:
                        best, best_y = pval, yp
            lower = max(lower, _dual_bound(project, start, params.rho * u))
        history.append(best)
        r_norm = float(np.linalg.norm(y - z))
        s_norm = params.rho * float(np.linalg.norm(z - z_old))
        eps_pri = root * params.eps_abs + params.eps_rel * max(np.linalg.norm(y), np.linalg.norm(z))
        eps_dual = root * params.eps_abs + params.eps_rel * params.rho * np.linalg.norm(u)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            reason = "residual"
            break
        if params.gap_tol > 0 and best - lower <= params.gap_tol * best:
            reason = "gap"
            break
    return ExtentResult(
        l1_value=best,
        xi=best * best,
        iterations=it,
        primal_residual=r_norm,
        dual_residual=s_norm,
        wall_time=time.perf_counter() - t0,
        converged=reason != "max_iter",
        method=method,
        lower_bound=lower,
        stop_reason=reason,
        decomposition=Decomposition(n, best_y),
        rational_hint=rational_hint(best * best),
        history=history,
    )


def _dual_bound(project: Callable[[np.ndarray], np.ndarray], start: np.ndarray, w: np.ndarray) -> float:
    """Lower bound on ``||y||_1`` over the affine set from a dual guess ``w``."""
    w = w - (project(w + start) - start)
    top = float(np.abs(w).max())
    if top == 0.0:
        return 0.0
    return max(0.0, float(np.vdot(w, start).real) / top)


def minimize_l1_affine(
    c: Decomposition,
    B: TripleBasis,
    params: SolverParams | None = None,
    ordering: StateOrdering | None = None,
) -> ExtentResult:
    """``min ||c + Bx||_1`` over complex ``x``; ``xi`` is its square.

    With an ``ordering`` the iterates are also polished on their support.
    """
    params = params or SolverParams()
    if c.n != B.n or c.coefficients.size != B.num_rows:
        raise ExtentError("decomposition and basis disagree on n")
    proj = BasisProjector(B, c.coefficients)
    polish = None
    if ordering is not None:
        psi = c.coefficients[: 1 << c.n]
        polish = ordering_polisher(psi, ordering)
    return admm_l1(proj, c.coefficients, params, "basis", B.n, polish)


def extent_dictionary(
    psi: np.ndarray, n: int, params: SolverParams | None = None, ordering: StateOrdering | None = None
) -> ExtentResult:
    """Basis pursuit ``min ||x||_1 s.t. S_n x = psi`` on the full dictionary."""
    params = params or SolverParams()
    if n > DICTIONARY_MAX_QUBITS:
        raise SolverGuard(f"dictionary method limited to n <= {DICTIONARY_MAX_QUBITS}")
    ordering = ordering or _ordering(n)
    psi = _check_state(psi, n)
    E = _dictionary(ordering)
    start = np.zeros(ordering.num_states, dtype=complex)
    start[: 1 << n] = psi
    polish = SupportPolisher(psi, lambda s: E[:, s], max_support=4 << n)
    return admm_l1(DictionaryProjector(E, psi), start, params, "dictionary", n, polish)


@lru_cache(maxsize=8)
def _ordering(n: int) -> StateOrdering:
    return StateOrdering(enumerate_lagrangians(n))


@lru_cache(maxsize=4)
def _basis(n: int) -> TripleBasis:
    return build_basis(_ordering(n))


@lru_cache(maxsize=2)
def _dictionary_cached(n: int) -> np.ndarray:
    return dictionary_matrix(_ordering(n))


def _dictionary(ordering: StateOrdering) -> np.ndarray:
    if ordering is _ordering(ordering.n):
        return _dictionary_cached(ordering.n)
    return dictionary_matrix(ordering)


def extent(psi: np.ndarray, method: str = "basis", params: SolverParams | None = None, basis: TripleBasis | None = None) -> ExtentResult:
    """Convenience wrapper that builds (and memoises) what each method needs."""
    psi = np.asarray(psi, dtype=complex)
    n = int(psi.size).bit_length() - 1
    if psi.size != 1 << n:
        raise ExtentError("state length is not a power of two")
    if method == "basis":
        B = basis if basis is not None else _basis(n)
        ordering = _ordering(n)
        c = computational_decomposition(psi, ordering)
        return minimize_l1_affine(c, B, params, ordering)
    if method == "dictionary":
        return extent_dictionary(psi, n, params)
    raise ExtentError(f"unknown method {method!r}")
