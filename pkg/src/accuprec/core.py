"""Working-precision matrices and vectors: band and CSR storage, products,
norms, a 2-norm power-iteration estimator, dense partial-pivoting solve, and
banded Cholesky.

Dense matrices are plain ``numpy.ndarray``; vectors are 1-D float64 arrays.
All matrix types are immutable after construction (backing arrays are frozen)
and every operation here is a pure function, so concurrent reads are safe.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from . import _kernels as _K
from .errors import DimensionMismatchError, SingularMatrixError

__all__ = [
    "BandMatrix", "SparseMatrix", "LinOp", "Norm2Estimate", "BandCholFactor",
    "as_vector", "as_dense", "spmv", "spmv_t", "norm", "norm2_estimate",
    "gepp_solve", "band_cholesky", "band_chol_solve", "aslinop", "eye_band",
]

Matrix = Union["BandMatrix", "SparseMatrix", np.ndarray]


def _frozen(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


def as_vector(x, n: Optional[int] = None) -> np.ndarray:
    """Validate a 1-D float64 vector: finite entries, optional length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected 1-D vector, got shape {v.shape}")
    if n is not None and len(v) != n:
        raise DimensionMismatchError(f"expected length {n}, got {len(v)}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_dense(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatchError(f"expected 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class BandMatrix:
    """Banded matrix: bands[i, off+lbw] = A[i, i+off] for -lbw <= off <= ubw.

    Slots outside the matrix (near the corners) must be zero.
    """
    n: int
    lbw: int
    ubw: int
    bands: np.ndarray

    def __post_init__(self):
        b = _frozen(self.bands)
        if b.shape != (self.n, self.lbw + self.ubw + 1):
            raise DimensionMismatchError(
                f"bands shape {b.shape} != ({self.n}, {self.lbw + self.ubw + 1})")
        if self.lbw >= self.n or self.ubw >= self.n:
            raise DimensionMismatchError("bandwidths must be < n")
        if not np.all(np.isfinite(b)):
            raise ValueError("band entries must be finite")
        for off in range(-self.lbw, self.ubw + 1):
            col = b[:, off + self.lbw]
            if off < 0 and np.any(col[:-off] != 0.0):
                raise ValueError("nonzero entry outside matrix (low corner)")
            if off > 0 and np.any(col[self.n - off:] != 0.0):
                raise ValueError("nonzero entry outside matrix (high corner)")
        object.__setattr__(self, "bands", b)

    @classmethod
    def from_diagonals(cls, n: int, diags: dict) -> "BandMatrix":
        """Build from {offset: scalar or length-n array}; corner slots of a
        scalar diagonal are filled only where the entry exists."""
        offs = sorted(diags)
        lbw = max(0, -offs[0])
        ubw = max(0, offs[-1])
        bands = np.zeros((n, lbw + ubw + 1))
        for off, val in diags.items():
            lo = max(0, -off)
            hi = n - max(0, off)
            col = np.zeros(n)
            if np.isscalar(val):
                col[lo:hi] = val
            else:
                v = np.asarray(val, dtype=np.float64)
                if len(v) == n:
                    col[lo:hi] = v[lo:hi]
                elif len(v) == hi - lo:
                    col[lo:hi] = v
                else:
                    raise DimensionMismatchError("diagonal length mismatch")
            bands[:, off + lbw] = col
        return cls(n, lbw, ubw, bands)

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        return self.bands[:, self.lbw].copy()

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for off in range(-self.lbw, self.ubw + 1):
            lo = max(0, -off)
            hi = self.n - max(0, off)
            idx = np.arange(lo, hi)
            a[idx, idx + off] = self.bands[lo:hi, off + self.lbw]
        return a

    def to_csr(self) -> "SparseMatrix":
        rows, cols, vals = [], [], []
        for off in range(-self.lbw, self.ubw + 1):
            lo = max(0, -off)
            hi = self.n - max(0, off)
            idx = np.arange(lo, hi)
            rows.append(idx)
            cols.append(idx + off)
            vals.append(self.bands[lo:hi, off + self.lbw])
        return SparseMatrix.from_coo(self.n, self.n, np.concatenate(rows),
                                     np.concatenate(cols), np.concatenate(vals))

    def transpose(self) -> "BandMatrix":
        # A[r, r+off] lands at A^T[r+off, r], i.e. offset -off, row r+off.
        bands = np.zeros((self.n, self.ubw + self.lbw + 1))
        for off in range(-self.lbw, self.ubw + 1):
            lo = max(0, -off)
            hi = self.n - max(0, off)
            bands[lo + off:hi + off, -off + self.ubw] = \
                self.bands[lo:hi, off + self.lbw]
        return BandMatrix(self.n, self.ubw, self.lbw, bands)

    def scaled(self, alpha: float) -> "BandMatrix":
        return BandMatrix(self.n, self.lbw, self.ubw, self.bands * alpha)

    def row_abs_sums(self) -> np.ndarray:
        return np.abs(self.bands).sum(axis=1)

    def col_abs_sums(self) -> np.ndarray:
        s = np.zeros(self.n)
        for off in range(-self.lbw, self.ubw + 1):
            lo = max(0, -off)
            hi = self.n - max(0, off)
            idx = np.arange(lo, hi)
            s[idx + off] += np.abs(self.bands[lo:hi, off + self.lbw])
        return s


@dataclass(frozen=True)
class SparseMatrix:
    """Compressed sparse row storage with strictly increasing column indices
    per row and finite values."""
    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        indptr = _frozen(self.indptr, dtype=np.int64)
        indices = _frozen(self.indices, dtype=np.int64)
        data = _frozen(self.data)
        if len(indptr) != self.n_rows + 1 or indptr[0] != 0:
            raise DimensionMismatchError("bad indptr")
        if np.any(np.diff(indptr) < 0) or indptr[-1] != len(indices):
            raise DimensionMismatchError("indptr not monotone / length mismatch")
        if len(indices) != len(data):
            raise DimensionMismatchError("indices/data length mismatch")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n_cols):
            raise DimensionMismatchError("column index out of range")
        for i in range(self.n_rows):
            ci = indices[indptr[i]:indptr[i + 1]]
            if len(ci) > 1 and np.any(np.diff(ci) <= 0):
                raise ValueError(f"row {i}: column indices not strictly increasing")
        if not np.all(np.isfinite(data)):
            raise ValueError("sparse values must be finite")
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals, sum_duplicates=True):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if sum_duplicates and len(rows):
            key_new = np.empty(len(rows), dtype=bool)
            key_new[0] = True
            key_new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            grp = np.cumsum(key_new) - 1
            out = np.zeros(grp[-1] + 1)
            np.add.at(out, grp, vals)
            rows, cols, vals = rows[key_new], cols[key_new], out
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n_rows, n_cols, indptr, cols, vals)

    @classmethod
    def zeros(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, np.zeros(n_rows + 1, dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def identity(cls, n, scale=1.0):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx,
                   np.full(n, float(scale)))

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.data)

    def to_dense(self) -> np.ndarray:
        a = np.zeros(self.shape)
        for i in range(self.n_rows):
            sl = slice(self.indptr[i], self.indptr[i + 1])
            a[i, self.indices[sl]] = self.data[sl]
        return a

    def transpose(self) -> "SparseMatrix":
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64),
                         np.diff(self.indptr))
        return SparseMatrix.from_coo(self.n_cols, self.n_rows,
                                     self.indices, rows, self.data,
                                     sum_duplicates=False)

    def column(self, j: int) -> np.ndarray:
        """Dense column j (O(nnz); use transpose() for many columns)."""
        col = np.zeros(self.n_rows)
        for i in range(self.n_rows):
            sl = self.indices[self.indptr[i]:self.indptr[i + 1]]
            pos = np.searchsorted(sl, j)
            if pos < len(sl) and sl[pos] == j:
                col[i] = self.data[self.indptr[i] + pos]
        return col

    def diagonal(self) -> np.ndarray:
        d = np.zeros(min(self.shape))
        for i in range(len(d)):
            sl = self.indices[self.indptr[i]:self.indptr[i + 1]]
            pos = np.searchsorted(sl, i)
            if pos < len(sl) and sl[pos] == i:
                d[i] = self.data[self.indptr[i] + pos]
        return d

    def row_abs_sums(self) -> np.ndarray:
        s = np.zeros(self.n_rows)
        np.add.at(s, np.repeat(np.arange(self.n_rows), np.diff(self.indptr)),
                  np.abs(self.data))
        return s

    def col_abs_sums(self) -> np.ndarray:
        s = np.zeros(self.n_cols)
        np.add.at(s, self.indices, np.abs(self.data))
        return s

    def max_nnz_per_row(self) -> int:
        return int(np.diff(self.indptr).max()) if self.n_rows else 0

    def scaled(self, alpha: float) -> "SparseMatrix":
        return SparseMatrix(self.n_rows, self.n_cols, self.indptr,
                            self.indices, self.data * alpha)


def eye_band(n: int) -> BandMatrix:
    return BandMatrix(n, 0, 0, np.ones((n, 1)))


@dataclass
class LinOp:
    """Deterministic abstract operator v -> A v (optionally with transpose)."""
    n: int
    apply: Callable[[np.ndarray], np.ndarray]
    symmetric: bool = False
    apply_t: Optional[Callable[[np.ndarray], np.ndarray]] = None
    nnz_per_row: Optional[int] = None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.apply(v)

    def t_apply(self, v: np.ndarray) -> np.ndarray:
        if self.symmetric:
            return self.apply(v)
        if self.apply_t is None:
            raise ValueError("operator has no transpose apply")
        return self.apply_t(v)


def aslinop(A) -> LinOp:
    if isinstance(A, LinOp):
        return A
    if isinstance(A, BandMatrix):
        At = A.transpose()
        sym = A.lbw == A.ubw and np.array_equal(A.bands, At.bands)
        return LinOp(A.n, lambda v: spmv(A, v), symmetric=sym,
                     apply_t=lambda v: spmv(At, v),
                     nnz_per_row=A.lbw + A.ubw + 1)
    if isinstance(A, SparseMatrix):
        At = A.transpose()
        return LinOp(A.n_rows, lambda v: spmv(A, v), symmetric=False,
                     apply_t=lambda v: spmv(At, v),
                     nnz_per_row=A.max_nnz_per_row())
    a = as_dense(A)
    return LinOp(a.shape[0], lambda v: a @ v,
                 symmetric=bool(np.array_equal(a, a.T)),
                 apply_t=lambda v: a.T @ v, nnz_per_row=a.shape[1])


# ---------------------------------------------------------------------------
# products and norms
# ---------------------------------------------------------------------------

def spmv(A: Matrix, v: np.ndarray) -> np.ndarray:
    """A @ v for any storage kind.

    Band and CSR rows accumulate left to right (deterministic); dense rows
    go through BLAS, which is deterministic for a fixed build.
    """
    if isinstance(A, BandMatrix):
        x = as_vector(v, A.n)
        return _K.band_matvec(A.bands, A.lbw, A.ubw, np.ascontiguousarray(x))
    if isinstance(A, SparseMatrix):
        x = as_vector(v, A.n_cols)
        return _K.csr_matvec(A.indptr, A.indices, A.data,
                             np.ascontiguousarray(x), A.n_rows)
    a = as_dense(A)
    x = as_vector(v, a.shape[1])
    return a @ x


def spmv_t(A: Matrix, v: np.ndarray) -> np.ndarray:
    """A.T @ v without forming the transpose for dense input."""
    if isinstance(A, (BandMatrix, SparseMatrix)):
        return spmv(A.transpose(), v)
    a = as_dense(A)
    return a.T @ as_vector(v, a.shape[0])


def norm(x, which: str = "two") -> float:
    """Vector/matrix norms.  which in {"one", "two", "inf"}.

    A matrix 2-norm is intentionally not computed here; use norm2_estimate.
    """
    if which not in ("one", "two", "inf"):
        raise ValueError(f"unknown norm {which!r}")
    if isinstance(x, BandMatrix) or isinstance(x, SparseMatrix):
        if which == "one":
            return float(x.col_abs_sums().max()) if x.shape[1] else 0.0
        if which == "inf":
            return float(x.row_abs_sums().max()) if x.shape[0] else 0.0
        raise ValueError("matrix two-norm: use norm2_estimate")
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        if which == "one":
            return float(np.abs(a).sum())
        if which == "inf":
            return float(np.abs(a).max()) if len(a) else 0.0
        return float(np.linalg.norm(a))
    if a.ndim == 2:
        if which == "one":
            return float(np.abs(a).sum(axis=0).max())
        if which == "inf":
            return float(np.abs(a).sum(axis=1).max())
        raise ValueError("matrix two-norm: use norm2_estimate")
    raise DimensionMismatchError("norm expects a vector or matrix")


class Norm2Estimate(NamedTuple):
    value: float
    converged: bool
    sweeps: int


def norm2_estimate(op, tol: float = 1e-2, maxit: int = 200,
                   seed: int = 0) -> Norm2Estimate:
    """Largest singular value by power iteration on v -> op^T(op v).

    Stops when the estimate changes by less than tol relatively between
    sweeps; returns the last estimate flagged unconverged otherwise.
    """
    op = aslinop(op)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.n)
    nv = np.linalg.norm(v)
    if nv == 0.0 or op.n == 0:
        return Norm2Estimate(0.0, True, 0)
    v /= nv
    est = 0.0
    for sweep in range(1, maxit + 1):
        w = op.apply(v)
        new_est = float(np.linalg.norm(w))  # ||A v|| at unit v
        if new_est == 0.0:
            return Norm2Estimate(0.0, True, sweep)
        z = op.t_apply(w)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return Norm2Estimate(new_est, True, sweep)
        v = z / nz
        if est > 0.0 and abs(new_est - est) <= tol * new_est:
            return Norm2Estimate(new_est, True, sweep)
        est = new_est
    return Norm2Estimate(est, False, maxit)


# ---------------------------------------------------------------------------
# baseline backward-stable solvers
# ---------------------------------------------------------------------------

def gepp_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense solve by Gaussian elimination with partial pivoting (LAPACK)."""
    a = as_dense(A)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError("gepp_solve needs a square matrix")
    x = as_vector(b, a.shape[0])
    try:
        return np.linalg.solve(a, x)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


@dataclass(frozen=True)
class BandCholFactor:
    """Lower-banded Cholesky factor, M = L L^T, same layout as BandMatrix
    lower part including the diagonal at slot lbw."""
    n: int
    lbw: int
    bands: np.ndarray

    def pivots(self) -> np.ndarray:
        """Diagonal of the LDL^T view: squares of the factor diagonal."""
        return self.bands[:, self.lbw] ** 2


def band_cholesky(M: BandMatrix) -> BandCholFactor:
    """Cholesky of a symmetric positive definite banded matrix.

    Only the lower part of M (including the diagonal) is read.
    """
    lbw = M.lbw
    lower = np.ascontiguousarray(M.bands[:, :lbw + 1])
    Lb = _K.band_chol_factor(lower, lbw)
    return BandCholFactor(M.n, lbw, Lb)


def band_chol_solve(factor: BandCholFactor, b: np.ndarray) -> np.ndarray:
    x = as_vector(b, factor.n)
    y = _K.band_chol_lower_solve(factor.bands, factor.lbw,
                                 np.ascontiguousarray(x))
    return _K.band_chol_lowerT_solve(factor.bands, factor.lbw, y)
