"""Accurate-preconditioning drivers for A = M + K.

The preconditioned system is I + M^{-1}K applied in exactly that shape:
products with vectors are computed as v + M^{-1}(K v), never by assembling
M^{-1}A, and the right-hand side becomes c = M^{-1}b.  Solved either by
forming the preconditioned matrix densely and eliminating with partial
pivoting, or by a Krylov method over the implicit operator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .core import (BandMatrix, LinOp, SparseMatrix, as_vector, norm, spmv,
                   spmv_t)
from .errors import (DimensionMismatchError, RefuseInexactSplitError,
                     SingularMatrixError)
from .handles import PrecondHandle, handle_solve
from .krylov import KrylovConfig, SolveReport, cg, default_config, gmres, minres
from .xprec import xp_residual, xp_residual_split

__all__ = ["SplitSystem", "split_from", "apply_preconditioned",
           "preconditioned_operator", "form_preconditioned_dense",
           "solve_direct", "solve_iterative"]

_TWO53 = 2.0 ** 53


@dataclass(frozen=True)
class SplitSystem:
    """A = M + K with M given through an inverse-equivalent solve handle.

    K is CSR (possibly empty for K = 0).  M_assembled (and optionally
    A_assembled) are carried for true-residual reporting only; the solve
    paths never touch the assembled A.
    """
    M: PrecondHandle
    K: SparseMatrix
    b: np.ndarray
    n: int
    M_assembled: Optional[Union[BandMatrix, SparseMatrix]] = None
    A_assembled: Optional[Union[BandMatrix, SparseMatrix]] = None
    symmetric: bool = False

    def __post_init__(self):
        if self.M.n != self.n or self.K.shape != (self.n, self.n):
            raise DimensionMismatchError("system dimensions do not conform")
        object.__setattr__(self, "b", as_vector(self.b, self.n))

    def with_rhs(self, b) -> "SplitSystem":
        return SplitSystem(self.M, self.K, b, self.n, self.M_assembled,
                           self.A_assembled, self.symmetric)


def _integral(data) -> bool:
    return bool(np.all(data == np.round(data)) and
                np.all(np.abs(data) < _TWO53))


def split_from(A: SparseMatrix, M_handle: PrecondHandle,
               M_assembled: Union[BandMatrix, SparseMatrix], b,
               symmetric: bool = False) -> SplitSystem:
    """Split A into M + K with K = A - M computed exactly.

    Requires integer entries on both sides (so the subtraction is exact);
    otherwise construct SplitSystem directly with an explicit K.
    """
    M_csr = M_assembled.to_csr() if isinstance(M_assembled, BandMatrix) \
        else M_assembled
    if not (_integral(A.data) and _integral(M_csr.data)):
        raise RefuseInexactSplitError(
            "split_from needs exactly representable integer entries; "
            "pass K explicitly for float systems")
    rows_a = np.repeat(np.arange(A.n_rows), np.diff(A.indptr))
    rows_m = np.repeat(np.arange(M_csr.n_rows), np.diff(M_csr.indptr))
    K = SparseMatrix.from_coo(
        A.n_rows, A.n_cols,
        np.concatenate([rows_a, rows_m]),
        np.concatenate([A.indices, M_csr.indices]),
        np.concatenate([A.data, -M_csr.data]))
    if not _integral(K.data):
        raise RefuseInexactSplitError("A - M overflowed the exact range")
    return SplitSystem(M_handle, K, b, A.n_rows, M_assembled=M_assembled,
                       A_assembled=A, symmetric=symmetric)


def apply_preconditioned(sys: SplitSystem, v: np.ndarray) -> np.ndarray:
    """(I + M^{-1}K) v computed as v + M^{-1}(K v), in that order.

    With K = 0 the result is v bitwise (the product short-circuits)."""
    if sys.K.nnz == 0:
        return as_vector(v, sys.n).copy()
    w = spmv(sys.K, v)
    w = handle_solve(sys.M, w)
    return v + w


def _apply_preconditioned_t(sys: SplitSystem, v: np.ndarray) -> np.ndarray:
    # (I + M^{-1}K)^T v = v + K^T M^{-T} v; valid for symmetric M handles
    # (all factor steps here are symmetric matrices).
    if sys.K.nnz == 0:
        return as_vector(v, sys.n).copy()
    w = handle_solve(sys.M, v)
    return v + spmv_t(sys.K, w)


def preconditioned_operator(sys: SplitSystem) -> LinOp:
    nnz_row = sys.K.max_nnz_per_row() + 1
    return LinOp(sys.n, lambda v: apply_preconditioned(sys, v),
                 symmetric=False,
                 apply_t=lambda v: _apply_preconditioned_t(sys, v),
                 nnz_per_row=nnz_row)


def form_preconditioned_dense(sys: SplitSystem):
    """Explicit (I + M^{-1}K, M^{-1}b) for the direct path (n <= 4096).

    Zero columns of K are skipped: their correction column is exactly zero.
    """
    n = sys.n
    if n > 4096:
        raise ValueError("dense preconditioned matrix capped at n=4096")
    B = np.eye(n)
    Kt = sys.K.transpose()
    for j in range(n):
        sl = slice(Kt.indptr[j], Kt.indptr[j + 1])
        if sl.start == sl.stop:
            continue
        col = np.zeros(n)
        col[Kt.indices[sl]] = Kt.data[sl]
        B[:, j] += handle_solve(sys.M, col)
    c = handle_solve(sys.M, sys.b)
    return B, c


def _onenorm_inv_estimate(lu_piv, trans_first: bool = False) -> float:
    """Hager's ||B^{-1}||_1 estimator reusing an LU factorization."""
    n = lu_piv[0].shape[0]
    x = np.full(n, 1.0 / n)
    est = 0.0
    for _ in range(5):
        y = scipy.linalg.lu_solve(lu_piv, x)
        est = float(np.abs(y).sum())
        xi = np.sign(y)
        xi[xi == 0.0] = 1.0
        z = scipy.linalg.lu_solve(lu_piv, xi, trans=1)
        j = int(np.argmax(np.abs(z)))
        if np.abs(z[j]) <= float(z @ x):
            break
        x = np.zeros(n)
        x[j] = 1.0
    return est


def solve_direct(sys: SplitSystem) -> SolveReport:
    """Form the preconditioned system densely and solve it by Gaussian
    elimination with partial pivoting.

    The report carries the observable proxies for the error bound: a 1-norm
    condition estimate of the formed matrix and ||K||_1 ||x||_1 / ||b||_1.
    """
    B, c = form_preconditioned_dense(sys)
    try:
        lu_piv = scipy.linalg.lu_factor(B, check_finite=False)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularMatrixError(str(exc)) from exc
    if np.any(np.diag(lu_piv[0]) == 0.0):
        raise SingularMatrixError(index=int(np.argmax(np.diag(lu_piv[0]) == 0.0)))
    x = scipy.linalg.lu_solve(lu_piv, c, check_finite=False)

    bnorm1 = norm(sys.b, "one")
    rho = norm(sys.K, "one") * norm(x, "one") / bnorm1 if bnorm1 else 0.0
    kappa1 = float(np.abs(B).sum(axis=0).max()) * _onenorm_inv_estimate(lu_piv)
    true_res = _true_residual(sys, x)
    return SolveReport(x, 1, True, np.array([]),
                       true_residual=true_res,
                       info={"status": "direct", "kappa1_B_est": kappa1,
                             "rho_factor_hat": rho,
                             "c_norm": float(np.linalg.norm(c))})


def _true_residual(sys: SplitSystem, x) -> Optional[float]:
    if sys.A_assembled is not None:
        return float(np.linalg.norm(xp_residual(sys.A_assembled, x, sys.b)))
    if sys.M_assembled is not None:
        return float(np.linalg.norm(
            xp_residual_split(sys.M_assembled, sys.K, x, sys.b)))
    return None


def solve_iterative(sys: SplitSystem, method: str = "gmres",
                    cfg: Optional[KrylovConfig] = None) -> SolveReport:
    """Krylov solve of the implicit preconditioned system.

    method "cg" requires the preconditioned operator to be symmetric
    positive definite (e.g. K a multiple of the identity with M symmetric);
    "minres" requires symmetry only.  The report's true_residual is for the
    original system, b - A x, accumulated in double-double.
    """
    if method not in ("gmres", "cg", "minres"):
        raise ValueError(f"unknown method {method!r}")
    if cfg is None:
        cfg = default_config(sys.n)
    c = handle_solve(sys.M, sys.b)
    if sys.K.nnz == 0:
        # B is the identity bitwise; the preconditioner solve is the answer
        rep = SolveReport(c, 1, True, np.array([0.0]),
                          true_residual=_true_residual(sys, c),
                          info={"status": "identity", "method": method,
                                "c_norm": float(np.linalg.norm(c))})
        return rep
    op = preconditioned_operator(sys)
    if method in ("cg", "minres"):
        op.symmetric = True
    if method == "gmres":
        rep = gmres(op, c, cfg)
    elif method == "cg":
        rep = cg(op, c, cfg)
    else:
        rep = minres(op, c, cfg)
    rep.info["preconditioned_residual"] = rep.true_residual
    rep.info["method"] = method
    rep.info["c_norm"] = float(np.linalg.norm(c))
    rep.true_residual = _true_residual(sys, rep.x)
    return rep
