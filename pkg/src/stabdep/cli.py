"""``stabdep`` command line: enumerate, basis, extent, verify, info.

Exit codes: 0 ok, 2 validation error, 3 resource guard, 4 verification
failure, 5 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .basis import (
    BasisError,
    BasisResourceGuard,
    build_basis,
    estimate_basis_bytes,
    export_basis,
    import_basis,
)
from .enumeration import (
    CACHE_ENV,
    SOFT_MAX_QUBITS,
    EnumerationError,
    ResourceGuard,
    StateOrdering,
    enumerate_lagrangians,
    lagrangian_count,
    load_cache,
    load_or_enumerate,
    save_cache,
    state_count,
)
from .extent import (
    DICTIONARY_MAX_QUBITS,
    ExtentError,
    SolverGuard,
    SolverParams,
    computational_decomposition,
    extent_dictionary,
    minimize_l1_affine,
)
from .pauli import MAX_QUBITS
from .states import StateError, parse_state_spec
from .verify import SUITES, run_suites

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GUARD = 3
EXIT_VERIFY = 4
EXIT_NONCONVERGED = 5

GIB = 1 << 30
DEFAULT_MAX_MEM = 16 * GIB


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt_bytes(b: float) -> str:
    for unit in ("B", "KiB", "MiB", "GiB", "TiB"):
        if b < 1024 or unit == "TiB":
            return f"{b:.1f} {unit}"
        b /= 1024
    return f"{b:.1f} TiB"


def enumeration_bytes(n: int) -> int:
    # one tuple of n Python ints per Lagrangian, plus rank and index entries
    return lagrangian_count(n) * (120 + 40 * n)


def extent_bytes(n: int, method: str) -> int:
    states = state_count(n)
    vectors = 16 * states * 16  # iterates, dual bound and scratch
    if method == "dictionary":
        return enumeration_bytes(n) + vectors + (states << n) * 16
    return enumeration_bytes(n) + vectors + estimate_basis_bytes(n)


def _guard(need: int, args: argparse.Namespace, what: str) -> None:
    print(f"estimated memory for {what}: {_fmt_bytes(need)}", file=sys.stderr)
    if need > args.max_mem and not args.force:
        raise CliError(
            f"{what} needs about {_fmt_bytes(need)}, above --max-mem {_fmt_bytes(args.max_mem)}; pass --force",
            EXIT_GUARD,
        )


def _check_n(n: int, args: argparse.Namespace) -> None:
    if n < 1:
        raise CliError("--n must be positive", EXIT_VALIDATION)
    if n > MAX_QUBITS:
        raise CliError(f"n = {n} exceeds the {MAX_QUBITS}-qubit word size", EXIT_GUARD)
    if n > SOFT_MAX_QUBITS and not args.force:
        raise CliError(
            f"n = {n} has {lagrangian_count(n):.3e} Lagrangians; the limit is {SOFT_MAX_QUBITS} without --force",
            EXIT_GUARD,
        )


def _emit(args: argparse.Namespace, payload: dict, text: str) -> None:
    print(json.dumps(payload, indent=2) if args.json else text)


def _ordering(n: int, args: argparse.Namespace) -> StateOrdering:
    cache = getattr(args, "cache", None)
    if cache and os.path.isfile(cache):
        return StateOrdering(load_cache(cache, n))
    return StateOrdering(load_or_enumerate(n, cache, allow_large=args.force))


# --- commands -----------------------------------------------------------------

def cmd_enumerate(args: argparse.Namespace) -> int:
    n = args.n
    if args.count_only:
        if n < 1:
            raise CliError("--n must be positive", EXIT_VALIDATION)
        counts = {"n": n, "lagrangians": lagrangian_count(n), "states": state_count(n)}
        _emit(args, counts, f"lagrangians={counts['lagrangians']} states={counts['states']}")
        return EXIT_OK
    _check_n(n, args)
    _guard(enumeration_bytes(n), args, f"enumeration at n={n}")
    lags = enumerate_lagrangians(n, allow_large=args.force)
    out = args.out
    if out is None and os.environ.get(CACHE_ENV):
        out = os.path.join(os.environ[CACHE_ENV], f"lagrangians_n{n}.stlg")
    if out is not None:
        save_cache(lags, out)
    payload = {"n": n, "lagrangians": len(lags), "states": len(lags) << n, "out": out}
    text = f"lagrangians={len(lags)} states={len(lags) << n}"
    if out is not None:
        text += f"\nwrote {out}"
    _emit(args, payload, text)
    return EXIT_OK


def cmd_basis(args: argparse.Namespace) -> int:
    n = args.n
    _check_n(n, args)
    _guard(enumeration_bytes(n) + estimate_basis_bytes(n), args, f"basis at n={n}")
    ordering = _ordering(n, args)
    B = build_basis(ordering, threads=args.threads, max_mem=args.max_mem, force=args.force)
    if args.out is not None:
        export_basis(B, args.out, args.format)
    payload = {"n": n, "rows": B.num_rows, "cols": B.num_cols, "nnz": B.nnz, "out": args.out, "format": args.format}
    text = f"B: {B.num_rows}x{B.num_cols}, nnz={B.nnz}"
    if args.out is not None:
        text += f"\nwrote {args.out} ({args.format})"
    _emit(args, payload, text)
    return EXIT_OK


def _solver_params(args: argparse.Namespace) -> SolverParams:
    kw = {"threads": args.threads}
    if args.rho is not None:
        kw["rho"] = args.rho
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.tol is not None:
        kw["eps_rel"] = args.tol
        kw["eps_abs"] = args.tol / 10
    if args.gap_tol is not None:
        kw["gap_tol"] = args.gap_tol
    return SolverParams(**kw)


def cmd_extent(args: argparse.Namespace) -> int:
    spec = parse_state_spec(args.state)
    params = _solver_params(args)
    psi = spec.build(normalize=args.normalize)
    n = psi.size.bit_length() - 1
    if args.method == "dictionary" and n > DICTIONARY_MAX_QUBITS:
        raise CliError(f"dictionary method is limited to n <= {DICTIONARY_MAX_QUBITS}", EXIT_GUARD)
    _check_n(n, args)
    _guard(extent_bytes(n, args.method), args, f"{args.method} extent at n={n}")
    ordering = _ordering(n, args)
    if args.method == "dictionary":
        result = extent_dictionary(psi, n, params, ordering)
    else:
        if args.basis_file:
            B = import_basis(args.basis_file)
            if B.n != n:
                raise CliError(f"basis file holds n = {B.n}, state has n = {n}", EXIT_VALIDATION)
        else:
            B = build_basis(ordering, threads=args.threads, max_mem=args.max_mem, force=args.force)
        result = minimize_l1_affine(computational_decomposition(psi, ordering), B, params, ordering)
    payload = result.to_json(str(spec), n, params)
    hint = f" (~{result.rational_hint})" if result.rational_hint is not None else ""
    text = (
        f"{spec}: xi = {result.xi:.8f}{hint}\n"
        f"l1 = {result.l1_value:.10f}, iterations = {result.iterations}, "
        f"residuals = {result.primal_residual:.2e}/{result.dual_residual:.2e}, "
        f"{result.wall_time:.2f} s, method = {result.method}\n"
        f"stopped on {result.stop_reason}; certified xi >= {result.lower_bound**2:.8f}"
    )
    if not result.converged:
        text += "\nwarning: max_iter reached; xi is the best value found"
    _emit(args, payload, text)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_verify(args: argparse.Namespace) -> int:
    n = args.n
    _check_n(n, args)
    if args.suite in ("columns", "triangular", "solve", "extent-cross", "all"):
        _guard(extent_bytes(n, "basis"), args, f"verification at n={n}")
    if args.suite == "extent-cross" and n > DICTIONARY_MAX_QUBITS:
        raise CliError(f"extent-cross needs n <= {DICTIONARY_MAX_QUBITS}", EXIT_GUARD)
    results = run_suites(args.suite, n)
    ok = all(r.passed for r in results)
    payload = {"n": n, "passed": ok, "suites": [r.to_json() for r in results]}
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.summary} ({r.seconds:.1f} s)" for r in results]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_info(args: argparse.Namespace) -> int:
    rows = []
    for n in range(1, args.max_n + 1):
        rows.append(
            {
                "n": n,
                "lagrangians": lagrangian_count(n),
                "states": state_count(n),
                "basis_columns": state_count(n) - (1 << n),
                "nnz": 3 * (state_count(n) - (1 << n)),
                "basis_bytes": estimate_basis_bytes(n),
            }
        )
    payload = {"version": __version__, "cache_dir": os.environ.get(CACHE_ENV), "sizes": rows}
    lines = [f"stabdep {__version__}", f"cache dir ({CACHE_ENV}): {payload['cache_dir'] or 'unset'}", ""]
    lines.append(f"{'n':>2} {'lagrangians':>14} {'states':>16} {'nnz(B)':>16} {'B memory':>12}")
    for r in rows:
        lines.append(
            f"{r['n']:>2} {r['lagrangians']:>14} {r['states']:>16} {r['nnz']:>16} {_fmt_bytes(r['basis_bytes']):>12}"
        )
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def _mem(text: str) -> int:
    """Byte count with an optional K/M/G/T suffix (binary units)."""
    text = text.strip().upper().removesuffix("IB").removesuffix("B")
    scale = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30, "T": 1 << 40}.get(text[-1:], 1)
    if scale != 1:
        text = text[:-1]
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad memory size {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("memory size must be positive")
    return int(value * scale)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabdep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON object")
    common.add_argument("--max-mem", type=_mem, default=DEFAULT_MAX_MEM, help="memory limit (default 16G)")
    common.add_argument("--force", action="store_true", help="ignore resource guards")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="enumerate Lagrangian subspaces")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", help="cache file to write")
    p.add_argument("--count-only", action="store_true", help="print counts from the product formula")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("basis", parents=[common], help="build the dependency basis B")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", help="file to write B to")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--cache", help="Lagrangian cache file or directory")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("extent", parents=[common], help="compute the stabiliser extent of a state")
    p.add_argument("--state", required=True, help="dicke:n,k | czk:n | t:n | ghz:n | file:path")
    p.add_argument("--method", choices=("basis", "dictionary"), default="basis")
    p.add_argument("--basis-file", help="precomputed B (bin or csv)")
    p.add_argument("--cache", help="Lagrangian cache file or directory")
    p.add_argument("--rho", type=float)
    p.add_argument("--max-iter", type=_positive_int)
    p.add_argument("--tol", type=float, help="relative tolerance; the absolute one is tol/10")
    p.add_argument("--gap-tol", type=float, help="stop once the relative l1 gap is below this (0: off)")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--normalize", action="store_true", help="rescale a non-unit input state")
    p.set_defaults(func=cmd_extent)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("info", parents=[common], help="sizes and memory estimates")
    p.add_argument("--max-n", type=int, default=6)
    p.set_defaults(func=cmd_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ResourceGuard, BasisResourceGuard, SolverGuard) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (EnumerationError, BasisError, ExtentError, StateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
