"""Command-line experiment runner and matrix utilities.

Subcommands:
  experiment  reproduce the solve/eigenvalue tables for families ex1..ex4
  solve       solve one system from Matrix Market files
  factor      accurate LDU of a diagonally dominant Matrix Market file
  eig         smallest eigenvalue of a user system

Exit codes: 0 success, 1 a required solve/eigen run did not converge,
3 I/O failure, 4 malformed input file, 2 usage errors (argparse).
CSV output is byte-identical for identical configuration and seed.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import __version__
from .core import BandMatrix, SparseMatrix, band_cholesky
from .dominant import accurate_ldu, from_assembled
from .eigs import inverse_iteration, lanczos_smallest
from .errors import AccuprecError, OverflowProtocolError, ParseError
from .handles import (CholeskyStep, DiagonalStep, ExplicitInverseStep,
                      LduStep, PrecondHandle)
from .krylov import default_config
from .mmio import mm_read, mm_read_vector, mm_write, mm_write_vector
from .precond import SplitSystem, solve_direct, solve_iterative, split_from
from .testbed import (ExperimentCase, biharmonic_eigenvalue,
                      convdiff_eigenvalue, gen_case, kappa2_A_estimate,
                      kappa2_B_estimate, make_exact_rhs, metrics,
                      norm_Ainv_estimate)

_EPS = float(np.finfo(np.float64).eps)

# Solve-table experiments iterate two decades past sqrt(n)*u: stopping at
# the threshold itself leaves a kappa(B)-amplified error component in eta_ie,
# while the reference tables clearly reached the attainable floor.
_SOLVE_TOL_FACTOR = 1e-2

_COLUMNS = ["family", "n", "param", "mode", "method", "status", "converged",
            "iterations", "kappaA_est", "kappaB_est", "eta_ie", "eta_rel",
            "rho_factor", "lambda", "lambda_exact", "rel_err",
            "eta_ie_full", "eta_rel_full", "rel_err_full"]


def _fmt(x, full: bool = False) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x) if full else f"{x:.5e}"
    return str(x)


@dataclass
class Row:
    values: dict = field(default_factory=dict)

    def csv(self) -> str:
        out = []
        for c in _COLUMNS:
            v = self.values.get(c, "")
            out.append(_fmt(v, full=c.endswith("_full")))
        return ",".join(out)

    def markdown_cells(self) -> List[str]:
        return [_fmt(self.values.get(c, ""), full=c.endswith("_full"))
                for c in _COLUMNS]


def _emit_table(rows: List[Row], fmt: str, path: Optional[str]) -> None:
    if fmt == "csv":
        lines = [",".join(_COLUMNS)] + [r.csv() for r in rows]
    else:
        header = "| " + " | ".join(_COLUMNS) + " |"
        sep = "|" + "|".join(["---"] * len(_COLUMNS)) + "|"
        lines = [header, sep] + ["| " + " | ".join(r.markdown_cells()) + " |"
                                 for r in rows]
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# experiment subcommand
# ---------------------------------------------------------------------------

def _parse_numbers(text: str) -> List[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "^" in tok:
            base, exp = tok.split("^")
            out.append(float(base) ** float(exp))
        else:
            out.append(float(tok))
    return out


def _plain_solve(case: ExperimentCase, b: np.ndarray):
    """Reference unpreconditioned solve of the assembled system (sparse LU
    with partial pivoting), the backslash analog."""
    import scipy.sparse
    import scipy.sparse.linalg
    A = case.A_csr
    S = scipy.sparse.csr_matrix((A.data, A.indices, A.indptr),
                                shape=A.shape).tocsc()
    lu = scipy.sparse.linalg.splu(S)
    return lu.solve(b)


def _solve_rows(args, family, params):
    rows: List[Row] = []
    all_ok = True
    modes = (["accurate", "baseline", "plain"] if args.mode == "all"
             else [args.mode])
    for param in params:
        case = gen_case(family, args.n, param, seed=args.seed,
                        density=args.density)
        cfg = default_config(case.n, maxit=args.maxit)
        cfg.tol = args.tol if args.tol is not None \
            else max(cfg.tol * _SOLVE_TOL_FACTOR, 2.0 * _EPS)
        loose = default_config(case.n, tol=max(1e-6, cfg.tol), maxit=args.maxit)
        try:
            x_exact, b, _info = make_exact_rhs(
                case.A_int, args.seed, case.solve_fn("accurate", loose))
        except OverflowProtocolError as exc:
            print(f"# {family} n={case.n} param={param:g}: {exc}",
                  file=sys.stderr)
            for mode in modes:
                rows.append(Row({"family": family, "n": case.n,
                                 "param": param, "mode": mode,
                                 "method": case.method,
                                 "status": "exact_rhs_unavailable",
                                 "converged": False}))
            all_ok = False
            continue
        inner = default_config(case.n, tol=max(1e-8, cfg.tol), maxit=args.maxit)
        solve = case.solve_fn("accurate", inner)
        if case.symmetric:
            normAinv = norm_Ainv_estimate(solve, case.n, symmetric=True)
        else:
            from .testbed import _transposed_case
            solve_t = _transposed_case(case).solve_fn("accurate", inner)
            normAinv = norm_Ainv_estimate(solve, case.n, solve_t=solve_t)
        kappaA = kappaB = None
        if args.kappa in ("a", "ab"):
            kappaA = kappa2_A_estimate(case)
        if args.kappa == "ab":
            kappaB = kappa2_B_estimate(case)

        for mode in modes:
            row = {"family": family, "n": case.n, "param": param,
                   "mode": mode, "kappaA_est": kappaA}
            if mode == "plain":
                row["method"] = "splu"
                if case.A_csr is None or not case.exact_assembly:
                    row["status"] = "assembly_inexact_skipped"
                    row["converged"] = False
                    all_ok = False
                    rows.append(Row(row))
                    continue
                x = _plain_solve(case, b)
                row.update({"status": "direct", "converged": True,
                            "iterations": 1})
            else:
                method = args.method or case.method
                row["method"] = method
                rep = solve_iterative(case.system(b, mode), method, cfg)
                x = rep.x
                row.update({"status": rep.info.get("status", ""),
                            "converged": rep.converged,
                            "iterations": rep.iterations,
                            "kappaB_est": kappaB})
                if not rep.converged:
                    all_ok = False
            m = metrics(x, x_exact, b, normAinv, case.K)
            row.update({"eta_ie": m.eta_ie, "eta_rel": m.eta_rel,
                        "rho_factor": m.rho_factor,
                        "eta_ie_full": m.eta_ie, "eta_rel_full": m.eta_rel})
            rows.append(Row(row))
    return rows, all_ok


def _eig_rows(args, family, params, ns):
    rows: List[Row] = []
    all_ok = True
    modes = (["accurate", "baseline"] if args.mode in ("all", "plain")
             else [args.mode])
    for n, param in zip(ns, params):
        case = gen_case(family, n, param, seed=args.seed)
        tol = args.tol if args.tol is not None else math.sqrt(n) * _EPS
        cfg = default_config(n, maxit=args.maxit)
        if family == "ex3":
            lam_exact = convdiff_eigenvalue(param, 1)
        else:
            lam_exact = biharmonic_eigenvalue(n, 1, param)
        if args.method:
            case.method = args.method
        v0 = np.ones(n) / math.sqrt(n)
        for mode in modes:
            applyH = case.solve_fn(mode, cfg)
            rep = inverse_iteration(applyH, v0, tol, maxit=args.eig_maxit)
            rel = abs(rep.lam - lam_exact) / abs(lam_exact)
            if not rep.converged:
                all_ok = False
            rows.append(Row({
                "family": family, "n": n, "param": param, "mode": mode,
                "method": case.method, "status": rep.info.get("status", ""),
                "converged": rep.converged, "iterations": rep.iterations,
                "lambda": rep.lam, "lambda_exact": lam_exact,
                "rel_err": rel, "rel_err_full": rel}))
    return rows, all_ok


def cmd_experiment(args) -> int:
    family = args.family
    if family in ("ex1", "ex2"):
        params = _parse_numbers(args.gamma if args.gamma else "10")
        rows, ok = _solve_rows(args, family, params)
    elif family == "ex3":
        gamma = _parse_numbers(args.gamma)[0] if args.gamma else 1.0
        if args.hmin:
            hmin = _parse_numbers(args.hmin)[0]
            hs = []
            h = 2.0 ** -6
            while h >= hmin * (1.0 - 1e-12):
                hs.append(h)
                h *= 2.0 ** -2
        else:
            hs = [2.0 ** -e for e in (6, 8, 10)]
        ns = [int(round(gamma / h)) - 1 for h in hs]
        rows, ok = _eig_rows(args, family, [gamma] * len(ns), ns)
    elif family == "ex4":
        params = _parse_numbers(args.rho if args.rho else "1")
        rows, ok = _eig_rows(args, family, params, [args.n] * len(params))
    else:
        raise ValueError(f"unknown family {family!r}")
    _emit_table(rows, args.output, args.out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# matrix utilities
# ---------------------------------------------------------------------------

def _looks_banded(A: SparseMatrix, max_bw: int = 64):
    lbw = ubw = 0
    for i in range(A.n_rows):
        sl = A.indices[A.indptr[i]:A.indptr[i + 1]]
        if len(sl):
            lbw = max(lbw, int(i - sl.min()))
            ubw = max(ubw, int(sl.max() - i))
    if max(lbw, ubw) > max_bw:
        return None
    bands = np.zeros((A.n_rows, lbw + ubw + 1))
    for i in range(A.n_rows):
        for t in range(A.indptr[i], A.indptr[i + 1]):
            bands[i, A.indices[t] - i + lbw] = A.data[t]
    return BandMatrix(A.n_rows, lbw, ubw, bands)


def _rep_from_file(path, mode: str):
    A = mm_read(path)
    band = _looks_banded(A)
    return from_assembled(band if band is not None else A, mode=mode)


def _build_handle(args):
    """Returns (handle, assembled M or None)."""
    steps = []
    assembled = None
    if args.precond:
        paths = args.precond.split(",")
        for p in paths:
            rep = _rep_from_file(p.strip(), args.rep_mode)
            steps.append(LduStep(accurate_ldu(rep)))
        if len(paths) == 1:
            A = mm_read(paths[0])
            band = _looks_banded(A)
            assembled = band if band is not None else A
    if args.precond_chol:
        A = mm_read(args.precond_chol)
        band = _looks_banded(A)
        if band is None:
            raise AccuprecError("--precond-chol needs a banded matrix")
        steps.append(CholeskyStep(band_cholesky(band)))
        assembled = band if assembled is None else assembled
    if args.inverse:
        Minv = mm_read(args.inverse).to_dense()
        steps.append(ExplicitInverseStep(Minv))
    if args.diagonal:
        steps.append(DiagonalStep(mm_read_vector(args.diagonal)))
    if not steps:
        raise AccuprecError("no preconditioner specified")
    return PrecondHandle(args.alpha, tuple(steps)), assembled


def _read_rhs(path, n) -> np.ndarray:
    if path is None:
        return np.zeros(n)  # eig path: the rhs slot is unused
    if path.endswith(".txt"):
        return np.loadtxt(path).reshape(-1)[:n]
    return mm_read_vector(path)


def _build_system(args) -> SplitSystem:
    A = mm_read(args.matrix)
    handle, assembled = _build_handle(args)
    b = _read_rhs(args.rhs, A.n_rows)
    if args.k:
        K = mm_read(args.k)
        return SplitSystem(handle, K, b, A.n_rows,
                           M_assembled=assembled, A_assembled=A)
    if args.k_zero:
        return SplitSystem(handle, SparseMatrix.zeros(A.n_rows, A.n_rows),
                           b, A.n_rows, M_assembled=assembled, A_assembled=A)
    if assembled is None:
        raise AccuprecError("K = A - M needs a single assembled --precond; "
                            "pass --k or --k-zero instead")
    return split_from(A, handle, assembled, b)


def cmd_solve(args) -> int:
    sys_ = _build_system(args)
    if args.method == "direct":
        rep = solve_direct(sys_)
    else:
        cfg = default_config(sys_.n, maxit=args.maxit)
        if args.tol is not None:
            cfg.tol = args.tol
        rep = solve_iterative(sys_, args.method, cfg)
    print(f"status={rep.info.get('status')} iterations={rep.iterations} "
          f"converged={rep.converged} true_residual={rep.true_residual}",
          file=sys.stderr)
    if args.out:
        if args.out.endswith(".mtx"):
            mm_write_vector(rep.x, args.out)
        else:
            with open(args.out, "w") as fh:
                for v in rep.x:
                    fh.write(repr(float(v)) + "\n")
    else:
        for v in rep.x:
            print(repr(float(v)))
    return 0 if rep.converged else 1


def cmd_factor(args) -> int:
    rep = _rep_from_file(args.matrix, args.rep_mode)
    f = accurate_ldu(rep)
    prefix = args.out or "factor"
    mm_write(f.L_matrix(), prefix + "_L.mtx")
    mm_write_vector(f.d, prefix + "_D.mtx")
    mm_write(f.U_matrix(), prefix + "_U.mtx")
    print(f"n={f.n} min_dominance={f.min_dominance!r} "
          f"d_min={f.d.min()!r} d_max={f.d.max()!r}", file=sys.stderr)
    return 0


def cmd_eig(args) -> int:
    sys_ = _build_system(args)
    cfg = default_config(sys_.n, maxit=args.maxit)
    tol = args.tol if args.tol is not None else math.sqrt(sys_.n) * _EPS
    method = args.method if args.method != "direct" else "gmres"

    def applyH(v):
        return solve_iterative(sys_.with_rhs(v), method, cfg).x

    v0 = np.ones(sys_.n) / math.sqrt(sys_.n)
    if args.count > 1:
        reps = lanczos_smallest(applyH, v0, args.count, tol,
                                maxit=args.eig_maxit)
        ok = all(r.converged for r in reps)
        for r in reps:
            print(f"lambda={r.lam!r} theta={r.theta!r} residual={r.residual:.3e} "
                  f"converged={r.converged}")
        return 0 if ok else 1
    rep = inverse_iteration(applyH, v0, tol, maxit=args.eig_maxit)
    print(f"lambda={rep.lam!r} theta={rep.theta!r} iterations={rep.iterations} "
          f"residual={rep.residual:.3e} converged={rep.converged}")
    return 0 if rep.converged else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_precond_flags(p):
    p.add_argument("--precond", help="comma-separated dd matrix files; the "
                   "chain applies factor inverses in the given order")
    p.add_argument("--precond-chol", help="banded SPD matrix solved by "
                   "Cholesky (baseline accuracy)")
    p.add_argument("--inverse", help="explicit inverse matrix file")
    p.add_argument("--diagonal", help="diagonal vector file")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="scalar factor of the preconditioner")
    p.add_argument("--rep-mode", choices=["exact", "floating"],
                   default="exact", help="dominance vector construction")
    p.add_argument("--k", help="explicit K matrix file (A = M + K)")
    p.add_argument("--k-zero", action="store_true", help="K = 0")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="accuprec",
        description="accurate preconditioning experiments and utilities")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="key=value file of default flags")
    sub = ap.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("experiment", help="run a paper-style table")
    ex.add_argument("family", choices=["ex1", "ex2", "ex3", "ex4"])
    ex.add_argument("--n", type=int, default=1023)
    ex.add_argument("--gamma", help="comma list (ex1/ex2/ex3)")
    ex.add_argument("--rho", help="comma list (ex4)")
    ex.add_argument("--hmin", help="smallest mesh h for ex3, e.g. 2^-14")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--density", type=float, default=0.001)
    ex.add_argument("--mode", default="all",
                    choices=["accurate", "baseline", "plain", "all"])
    ex.add_argument("--method", default=None,
                    choices=["gmres", "cg", "minres"],
                    help="override the family's default Krylov method")
    ex.add_argument("--tol", type=float, default=None)
    ex.add_argument("--maxit", type=int, default=2000)
    ex.add_argument("--eig-maxit", type=int, default=100)
    ex.add_argument("--kappa", choices=["none", "a", "ab"], default="a")
    ex.add_argument("--output", choices=["csv", "markdown"], default="csv")
    ex.add_argument("--out", help="output path (default stdout)")
    ex.set_defaults(func=cmd_experiment)

    so = sub.add_parser("solve", help="solve A x = b from files")
    so.add_argument("--matrix", required=True)
    so.add_argument("--rhs", required=True)
    _add_precond_flags(so)
    so.add_argument("--method", default="gmres",
                    choices=["gmres", "cg", "minres", "direct"])
    so.add_argument("--tol", type=float, default=None)
    so.add_argument("--maxit", type=int, default=2000)
    so.add_argument("--out")
    so.set_defaults(func=cmd_solve)

    fa = sub.add_parser("factor", help="accurate LDU of a dd matrix file")
    fa.add_argument("--matrix", required=True)
    fa.add_argument("--rep-mode", choices=["exact", "floating"],
                    default="exact")
    fa.add_argument("--out", help="output prefix (writes _L/_D/_U .mtx)")
    fa.set_defaults(func=cmd_factor)

    ei = sub.add_parser("eig", help="smallest |eigenvalue| of a user system")
    ei.add_argument("--matrix", required=True)
    ei.add_argument("--rhs", help=argparse.SUPPRESS)  # unused; kept uniform
    _add_precond_flags(ei)
    ei.add_argument("--method", default="gmres",
                    choices=["gmres", "cg", "minres"])
    ei.add_argument("--tol", type=float, default=None)
    ei.add_argument("--maxit", type=int, default=2000)
    ei.add_argument("--eig-maxit", type=int, default=100)
    ei.add_argument("--count", type=int, default=1,
                    help="number of eigenvalues (Lanczos when > 1)")
    ei.set_defaults(func=cmd_eig)
    return ap


def _apply_config(argv: List[str]) -> List[str]:
    """Expand `--config file` into leading --key value tokens."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    extra: List[str] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            extra.append(f"--{key.strip().replace('_', '-')}")
            if val.strip():
                extra.append(val.strip())
    # subcommand and its positional stay first
    head = rest[:2] if len(rest) >= 2 and not rest[1].startswith("-") else rest[:1]
    return head + extra + rest[len(head):]


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config(argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AccuprecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
