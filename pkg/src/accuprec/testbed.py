"""Test-matrix generators, the exact integer right-hand-side protocol,
analytic eigenvalues, and the error metrics for the experiment families.

Families (CLI names):
  ex1  1-D convection-diffusion solve:  A = 2(n+1) T - gamma K
  ex2  biharmonic + random sparse:      A = (n+1)^4 T^2 + gamma S
  ex3  convection-diffusion eigenvalue: A = (n+1)^2/g^2 T - (n+1)/(2g) K
  ex4  biharmonic + shift eigenvalue:   A = (n+1)^4 T^2 + rho I

T is the tridiagonal (-1, 2, -1) Laplacian stencil and K the skew-symmetric
(-1, 0, 1) difference; both integer.  Randomness (the sparse S and the
right-hand-side seed vector) uses numpy's seeded PCG64 generator, fixed
here; only distributional properties are reproducible across platforms,
the exact draws are reproducible for a fixed numpy build.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .core import (BandMatrix, LinOp, SparseMatrix, as_vector, norm,
                   norm2_estimate, band_cholesky)
from .dominant import accurate_ldu, from_assembled
from .errors import OverflowProtocolError
from .handles import CholeskyStep, LduStep, PrecondHandle
from .krylov import KrylovConfig, default_config
from .precond import SplitSystem, solve_iterative
from .xprec import dd_diff_norm2

__all__ = [
    "laplace_tridiag", "skew_diff_tridiag", "biharmonic_band",
    "gen_sparse_S", "ExperimentCase", "gen_case", "make_exact_rhs",
    "MetricSet", "metrics", "norm_Ainv_estimate", "kappa2_A_estimate",
    "kappa2_B_estimate", "convdiff_eigenvalue", "biharmonic_eigenvalue",
    "laplace_eigenvalue", "tinv_column", "tinv_norm2",
]

_EPS = float(np.finfo(np.float64).eps)
_TWO53 = 2 ** 53


# ---------------------------------------------------------------------------
# stencil matrices
# ---------------------------------------------------------------------------

def laplace_tridiag(n: int) -> BandMatrix:
    """Tridiagonal (-1, 2, -1)."""
    if n < 2:
        raise ValueError("n >= 2 required")
    return BandMatrix.from_diagonals(n, {-1: -1.0, 0: 2.0, 1: -1.0})


def skew_diff_tridiag(n: int) -> BandMatrix:
    """Skew-symmetric tridiagonal with +1 on the superdiagonal."""
    if n < 2:
        raise ValueError("n >= 2 required")
    return BandMatrix.from_diagonals(n, {-1: -1.0, 1: 1.0})


def biharmonic_band(n: int) -> BandMatrix:
    """Pentadiagonal square of the Laplacian stencil: (1, -4, 6, -4, 1)
    with 5 at both diagonal ends."""
    if n < 3:
        raise ValueError("n >= 3 required")
    diag = np.full(n, 6.0)
    diag[0] = diag[-1] = 5.0
    return BandMatrix.from_diagonals(
        n, {-2: 1.0, -1: -4.0, 0: diag, 1: -4.0, 2: 1.0})


def gen_sparse_S(n: int, density: float = 0.001, seed: int = 0) -> SparseMatrix:
    """Random sparse integer matrix: round(density*n^2) distinct positions
    (Floyd sampling, rejection-free) with values floor(10 * standard
    normal); value-zeros are dropped from storage."""
    rng = np.random.default_rng(seed)
    total = n * n
    m = int(round(density * total))
    m = min(m, total)
    chosen = set()
    for t in range(total - m, total):
        j = int(rng.integers(0, t + 1))
        if j in chosen:
            chosen.add(t)
        else:
            chosen.add(j)
    flat = np.fromiter(chosen, dtype=np.int64, count=len(chosen))
    flat.sort()
    vals = np.floor(10.0 * rng.standard_normal(len(flat)))
    return SparseMatrix.from_coo(n, n, flat // n, flat % n, vals)


# ---------------------------------------------------------------------------
# band arithmetic on exact integer stencils
# ---------------------------------------------------------------------------

def _band_add_csr(Mb: BandMatrix, K: SparseMatrix) -> Tuple[list, list, list]:
    """COO triples of M + K with python-int values (exact)."""
    rows, cols, vals = [], [], []
    for off in range(-Mb.lbw, Mb.ubw + 1):
        lo = max(0, -off)
        hi = Mb.n - max(0, off)
        col = Mb.bands[lo:hi, off + Mb.lbw]
        for i, v in zip(range(lo, hi), col):
            rows.append(i)
            cols.append(i + off)
            vals.append(int(v))
    for i in range(K.n_rows):
        for t in range(K.indptr[i], K.indptr[i + 1]):
            rows.append(i)
            cols.append(int(K.indices[t]))
            vals.append(int(K.data[t]))
    return rows, cols, vals


def _coo_to_int_csr(n, rows, cols, vals):
    """Merge duplicate positions; returns (indptr, indices, data) with
    python-int data (exact at any magnitude)."""
    merged = {}
    for r, c, v in zip(rows, cols, vals):
        merged[(r, c)] = merged.get((r, c), 0) + v
    items = sorted((rc, v) for rc, v in merged.items() if v != 0)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = np.empty(len(items), dtype=np.int64)
    data = []
    for t, ((r, c), v) in enumerate(items):
        indptr[r + 1] += 1
        indices[t] = c
        data.append(v)
    indptr = np.cumsum(indptr)
    return indptr, indices, data


def _int_csr_to_float(n, indptr, indices, data):
    """Exact float CSR, or None if any value is not representable."""
    fdata = np.empty(len(data))
    for t, v in enumerate(data):
        f = float(v)
        if int(f) != v:
            return None
        fdata[t] = f
    return SparseMatrix(n, n, indptr.copy(), indices.copy(), fdata)


# ---------------------------------------------------------------------------
# experiment cases
# ---------------------------------------------------------------------------

@dataclass
class ExperimentCase:
    """One (family, n, parameter, seed) instance with its split system
    pieces and per-mode preconditioner handles (built lazily, cached)."""
    family: str
    n: int
    param: float
    seed: int
    K: SparseMatrix
    M_band: BandMatrix
    T_band: BandMatrix
    alpha: float
    chain_len: int
    symmetric: bool
    method: str
    A_csr: Optional[SparseMatrix] = None
    A_int: Optional[tuple] = None          # (indptr, indices, py-int data)
    exact_assembly: bool = True
    _handles: dict = field(default_factory=dict, repr=False)

    def handle(self, mode: str) -> PrecondHandle:
        if mode not in self._handles:
            if mode == "accurate":
                rep = from_assembled(self.T_band, mode="exact")
                step = LduStep(accurate_ldu(rep))
                self._handles[mode] = PrecondHandle(
                    self.alpha, tuple([step] * self.chain_len))
            elif mode == "baseline":
                step = CholeskyStep(band_cholesky(self.M_band))
                self._handles[mode] = PrecondHandle(1.0, (step,))
            else:
                raise ValueError(f"unknown mode {mode!r}")
        return self._handles[mode]

    def system(self, b, mode: str = "accurate") -> SplitSystem:
        return SplitSystem(self.handle(mode), self.K, b, self.n,
                           M_assembled=self.M_band,
                           A_assembled=self.A_csr if self.exact_assembly else None,
                           symmetric=self.symmetric)

    def solve_fn(self, mode: str = "accurate",
                 cfg: Optional[KrylovConfig] = None) -> Callable:
        def fn(v):
            return solve_iterative(self.system(v, mode), self.method, cfg).x
        return fn

    def config_text(self) -> str:
        """key=value serialization, consumable by the CLI --config flag
        (the family itself is the CLI positional)."""
        key = "rho" if self.family == "ex4" else "gamma"
        return f"n={self.n}\n{key}={self.param:g}\nseed={self.seed}\n"


def _case_ex1(n: int, gamma: float, seed: int) -> ExperimentCase:
    g = int(gamma)
    if g != gamma:
        raise ValueError("ex1 needs an integer gamma")
    T = laplace_tridiag(n)
    alpha = 2.0 * (n + 1)
    M_band = T.scaled(alpha)
    K = skew_diff_tridiag(n).scaled(-float(g)).to_csr()
    rows, cols, vals = _band_add_csr(M_band, K)
    indptr, indices, data = _coo_to_int_csr(n, rows, cols, vals)
    A_csr = _int_csr_to_float(n, indptr, indices, data)
    return ExperimentCase("ex1", n, float(g), seed, K, M_band, T, alpha, 1,
                          symmetric=False, method="gmres", A_csr=A_csr,
                          A_int=(indptr, indices, data),
                          exact_assembly=A_csr is not None)


def _case_ex2(n: int, gamma: float, seed: int,
              density: float = 0.001) -> ExperimentCase:
    g = int(gamma)
    if g != gamma:
        raise ValueError("ex2 needs an integer gamma")
    T = laplace_tridiag(n)
    alpha_int = (n + 1) ** 4
    alpha = float(alpha_int)
    exact_scale = int(alpha) == alpha_int and float(6 * alpha_int) == 6.0 * alpha
    M_band = biharmonic_band(n).scaled(alpha)
    S = gen_sparse_S(n, density=density, seed=seed)
    K = S.scaled(float(g))
    rows, cols, vals = _band_add_csr(M_band, K)
    indptr, indices, data = _coo_to_int_csr(n, rows, cols, vals)
    A_csr = _int_csr_to_float(n, indptr, indices, data) if exact_scale else None
    return ExperimentCase("ex2", n, float(g), seed, K, M_band, T, alpha, 2,
                          symmetric=False, method="gmres", A_csr=A_csr,
                          A_int=(indptr, indices, data) if exact_scale else None,
                          exact_assembly=A_csr is not None)


def _case_ex3(n: int, gamma: float, seed: int) -> ExperimentCase:
    g = int(gamma)
    if g != gamma or g < 1:
        raise ValueError("ex3 needs a positive integer gamma")
    T = laplace_tridiag(n)
    c1 = (n + 1) ** 2 / g ** 2
    c2 = (n + 1) / (2.0 * g)
    exact = (g == 1) and (n + 1) % 2 == 0 and 2.0 * c1 < _TWO53
    M_band = T.scaled(c1)
    K = skew_diff_tridiag(n).scaled(-c2).to_csr()
    # assembled A (exact floats when `exact`); used for reporting only
    Ab = BandMatrix.from_diagonals(
        n, {-1: -c1 + c2, 0: 2.0 * c1, 1: -c1 - c2})
    A_csr = Ab.to_csr()
    return ExperimentCase("ex3", n, float(g), seed, K, M_band, T, c1, 1,
                          symmetric=False, method="gmres", A_csr=A_csr,
                          A_int=None, exact_assembly=exact)


def _case_ex4(n: int, rho: float, seed: int) -> ExperimentCase:
    r = int(rho)
    if r != rho:
        raise ValueError("ex4 needs an integer rho")
    T = laplace_tridiag(n)
    alpha_int = (n + 1) ** 4
    alpha = float(alpha_int)
    exact_scale = int(alpha) == alpha_int and float(6 * alpha_int) == 6.0 * alpha
    M_band = biharmonic_band(n).scaled(alpha)
    K = SparseMatrix.identity(n, scale=float(r)) if r != 0 \
        else SparseMatrix.zeros(n, n)
    rows, cols, vals = _band_add_csr(M_band, K)
    indptr, indices, data = _coo_to_int_csr(n, rows, cols, vals)
    A_csr = _int_csr_to_float(n, indptr, indices, data) if exact_scale else None
    method = "cg" if r >= 0 else "minres"
    return ExperimentCase("ex4", n, float(r), seed, K, M_band, T, alpha, 2,
                          symmetric=True, method=method, A_csr=A_csr,
                          A_int=(indptr, indices, data) if exact_scale else None,
                          exact_assembly=A_csr is not None)


def gen_case(family: str, n: int, param: float, seed: int = 0,
             density: float = 0.001) -> ExperimentCase:
    if n < 3:
        raise ValueError("n >= 3 required")
    if family == "ex1":
        return _case_ex1(n, param, seed)
    if family == "ex2":
        return _case_ex2(n, param, seed, density=density)
    if family == "ex3":
        return _case_ex3(n, param, seed)
    if family == "ex4":
        return _case_ex4(n, param, seed)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# exact integer right-hand-side protocol
# ---------------------------------------------------------------------------

def make_exact_rhs(A_int: tuple, seed: int,
                   solver: Callable[[np.ndarray], np.ndarray],
                   scale_exp: int = 8):
    """Construct an exactly known (x, b) pair with b = A x in exact integers.

    b0 is a seeded uniform(0,1) vector, x0 any solve of A x0 = b0, and
    x = round(x0 * 10^k / ||x0||_inf) with the largest k <= scale_exp such
    that every row satisfies sum_j |a_ij| |x_j| < 2^53 (checked exactly).
    Returns (x, b, info); raises OverflowProtocolError when even k = 0
    cannot fit.
    """
    if A_int is None:
        raise OverflowProtocolError(
            "exact protocol unavailable: matrix exceeds the exact float range")
    indptr, indices, data = A_int
    n = len(indptr) - 1
    row_abs = [0] * n
    pos = 0
    for i in range(n):
        s = 0
        for t in range(indptr[i], indptr[i + 1]):
            s += abs(data[t])
        row_abs[i] = s
    max_row = max(row_abs) if n else 0
    if max_row == 0:
        raise OverflowProtocolError("zero matrix")
    cap = (_TWO53 - 1) // max_row
    if cap < 1:
        raise OverflowProtocolError(
            f"row magnitude {max_row:.3g} leaves no room for an integer x")
    k = min(scale_exp, len(str(int(cap))) - 1)
    xmax = 10 ** k

    rng = np.random.default_rng(seed)
    b0 = rng.random(n)
    x0 = as_vector(solver(b0), n)
    xinf = float(np.abs(x0).max())
    if xinf == 0.0:
        raise OverflowProtocolError("solver returned the zero vector")
    x = np.round(x0 * (float(xmax) / xinf))
    x_int = [int(v) for v in x]

    b_int = [0] * n
    for i in range(n):
        acc = 0
        check = 0
        for t in range(indptr[i], indptr[i + 1]):
            prod = data[t] * x_int[indices[t]]
            acc += prod
            check += abs(prod)
        if check >= _TWO53:
            raise OverflowProtocolError(
                f"row {i}: |A||x| = {check} reaches 2^53 after rescale")
        b_int[i] = acc
    # postcondition: the pair is exact and float-representable
    for i in range(n):
        acc = 0
        for t in range(indptr[i], indptr[i + 1]):
            acc += data[t] * x_int[indices[t]]
        if acc != b_int[i]:
            raise AssertionError("integer matvec mismatch")
    b = np.array([float(v) for v in b_int])
    for i in range(n):
        if int(b[i]) != b_int[i]:
            raise OverflowProtocolError(f"b[{i}] not exactly representable")
    return x.astype(np.float64), b, {"scale": xmax, "scale_exp": k}


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass
class MetricSet:
    eta_ie: float
    eta_rel: float
    rho_factor: float
    kappaA_est: Optional[float] = None
    kappaB_est: Optional[float] = None


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def metrics(xhat, x_exact, b, normAinv2: float,
            K: Optional[SparseMatrix]) -> MetricSet:
    """eta_ie = ||xhat-x|| / (||A^{-1}|| ||b||), eta_rel = ||xhat-x||/||x||,
    rho = ||K||_1 ||x||_1 / ||b||_1; differences accumulated in
    double-double.  Zero denominators yield inf (or 0 for a zero error)."""
    xhat = as_vector(xhat)
    x_exact = as_vector(x_exact, len(xhat))
    b = as_vector(b, len(xhat))
    err = dd_diff_norm2(xhat, x_exact)
    eta_ie = _ratio(err, normAinv2 * float(np.linalg.norm(b)))
    eta_rel = _ratio(err, float(np.linalg.norm(x_exact)))
    if K is None or K.nnz == 0:
        rho = 0.0
    else:
        rho = _ratio(norm(K, "one") * norm(x_exact, "one"), norm(b, "one"))
    return MetricSet(eta_ie=eta_ie, eta_rel=eta_rel, rho_factor=rho)


# ---------------------------------------------------------------------------
# norm and condition estimates
# ---------------------------------------------------------------------------

def norm_Ainv_estimate(solve: Callable, n: int,
                       solve_t: Optional[Callable] = None,
                       symmetric: bool = False, tol: float = 1e-2,
                       maxit: int = 60, seed: int = 3) -> float:
    """||A^{-1}||_2 to about two digits by power iteration on the inverse
    (applied through the supplied solve callables)."""
    if symmetric:
        op = LinOp(n, solve, symmetric=True)
    else:
        if solve_t is None:
            raise ValueError("nonsymmetric estimate needs solve_t")
        op = LinOp(n, solve_t, apply_t=solve)
    return norm2_estimate(op, tol=tol, maxit=maxit, seed=seed).value


def _operator_of_case(case: ExperimentCase) -> LinOp:
    Mv = case.M_band
    K = case.K

    def apply(v):
        from .core import spmv
        w = spmv(Mv, v)
        if K.nnz:
            w = w + spmv(K, v)
        return w

    def apply_t(v):
        from .core import spmv_t
        w = spmv_t(Mv, v)
        if K.nnz:
            w = w + spmv_t(K, v)
        return w

    return LinOp(case.n, apply, symmetric=case.symmetric, apply_t=apply_t)


def kappa2_A_estimate(case: ExperimentCase, inner_cfg=None,
                      tol: float = 1e-2) -> float:
    """kappa_2(A) to about one digit: power estimates of ||A||_2 and
    ||A^{-1}||_2 (accurate-path solves)."""
    normA = norm2_estimate(_operator_of_case(case), tol=tol).value
    cfg = inner_cfg or default_config(case.n, tol=max(1e-8, math.sqrt(case.n) * _EPS))
    solve = case.solve_fn("accurate", cfg)
    if case.symmetric:
        inv = norm_Ainv_estimate(solve, case.n, symmetric=True, tol=tol)
    else:
        caseT = _transposed_case(case)
        solve_t = caseT.solve_fn("accurate", cfg)
        inv = norm_Ainv_estimate(solve, case.n, solve_t=solve_t, tol=tol)
    return normA * inv


def _transposed_case(case: ExperimentCase) -> ExperimentCase:
    """Same M (symmetric), transposed K: solves A^T u = v."""
    return ExperimentCase(case.family, case.n, case.param, case.seed,
                          case.K.transpose(), case.M_band, case.T_band,
                          case.alpha, case.chain_len, case.symmetric,
                          case.method, case.A_csr, case.A_int,
                          case.exact_assembly, _handles=case._handles)


def kappa2_B_estimate(case: ExperimentCase, mode: str = "accurate",
                      tol: float = 5e-2, inner_tol: float = 1e-8) -> float:
    """kappa_2 of the preconditioned operator, to about one digit.

    ||B||_2 by power iteration on the operator; ||B^{-1}||_2 by power
    iteration with loose inner GMRES solves of B and B^T systems.
    """
    from .krylov import gmres
    from .precond import preconditioned_operator

    zero_b = np.zeros(case.n)
    sys = case.system(zero_b, mode)
    op = preconditioned_operator(sys)
    normB = norm2_estimate(op, tol=tol).value
    cfg = default_config(case.n, tol=inner_tol, maxit=600)
    opT = LinOp(case.n, op.t_apply, apply_t=op.apply)

    def solve(v):
        return gmres(op, v, cfg).x

    def solve_t(v):
        return gmres(opT, v, cfg).x

    invB = norm_Ainv_estimate(solve, case.n, solve_t=solve_t, tol=tol)
    return normB * invB


# ---------------------------------------------------------------------------
# analytic references
# ---------------------------------------------------------------------------

def convdiff_eigenvalue(gamma: float, i: int = 1) -> float:
    """Continuum eigenvalue 1/4 + (pi i / gamma)^2 of the 1-D
    convection-diffusion operator on (0, gamma)."""
    return 0.25 + (math.pi * i) ** 2 / gamma ** 2


def biharmonic_eigenvalue(n: int, j: int = 1, rho: float = 0.0) -> float:
    """Discrete eigenvalue (n+1)^4 * 16 sin^4(j pi h / 2) + rho of the
    1-D biharmonic discretization, h = 1/(n+1)."""
    h = 1.0 / (n + 1)
    return 16.0 * math.sin(j * math.pi * h / 2.0) ** 4 / h ** 4 + rho


def laplace_eigenvalue(n: int, k: int = 1) -> float:
    """Eigenvalue 2 - 2 cos(k pi/(n+1)) of the (-1, 2, -1) stencil."""
    return 2.0 - 2.0 * math.cos(k * math.pi / (n + 1))


def tinv_column(n: int, j: int) -> np.ndarray:
    """Column j (0-based) of the analytic inverse of laplace_tridiag(n):
    (T^{-1})_{ij} = min(i,j) (n+1-max(i,j)) / (n+1) in 1-based indices."""
    i = np.arange(1, n + 1, dtype=np.float64)
    jj = float(j + 1)
    return np.where(i <= jj, i * (n + 1 - jj), jj * (n + 1 - i)) / (n + 1)


def tinv_norm2(n: int) -> float:
    return 1.0 / laplace_eigenvalue(n, 1)
