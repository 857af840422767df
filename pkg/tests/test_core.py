import numpy as np
import pytest

from accuprec.core import (BandMatrix, LinOp, SparseMatrix, aslinop,
                           band_cholesky, band_chol_solve, gepp_solve, norm,
                           norm2_estimate, spmv, spmv_t)
from accuprec.errors import (DimensionMismatchError, NotPositiveDefiniteError,
                             SingularMatrixError)
from accuprec.testbed import laplace_tridiag, tinv_column
from accuprec.xprec import dd_to_float, xp_matvec, xp_solve


def test_spmv_identity():
    I3 = BandMatrix.from_diagonals(3, {0: 1.0})
    v = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(spmv(I3, v), v)


def test_spmv_t3_row_sums():
    T3 = laplace_tridiag(3)
    assert np.array_equal(spmv(T3, np.ones(3)), [1.0, 0.0, 1.0])


def test_spmv_matches_dd_oracle(rng):
    a = rng.standard_normal((50, 50))
    v = rng.standard_normal(50)
    got = spmv(a, v)
    ref = dd_to_float(xp_matvec(a, v))
    scale = np.abs(a) @ np.abs(v)
    assert np.all(np.abs(got - ref) <= 1e-13 * scale + 1e-300)


def test_spmv_columns_exact(rng):
    T = laplace_tridiag(6)
    S = T.to_csr()
    D = T.to_dense()
    for A in (T, S, D):
        for i in range(6):
            e = np.zeros(6)
            e[i] = 1.0
            assert np.array_equal(spmv(A, e), D[:, i])


def test_spmv_t(rng):
    a = rng.standard_normal((7, 7))
    rows, cols = np.nonzero(a)
    S = SparseMatrix.from_coo(7, 7, rows, cols, a[rows, cols])
    v = rng.standard_normal(7)
    assert np.allclose(spmv_t(S, v), a.T @ v, rtol=1e-14)


def test_spmv_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        spmv(laplace_tridiag(3), np.ones(4))


def test_norms():
    assert norm(np.array([3.0, -4.0])) == 5.0
    T3 = laplace_tridiag(3)
    assert norm(T3, "inf") == 4.0
    assert norm(T3, "one") == 4.0
    assert norm(T3.to_dense(), "inf") == 4.0
    with pytest.raises(ValueError):
        norm(T3, "two")
    with pytest.raises(ValueError):
        norm(np.eye(2), "two")


def test_norm2_estimate_diag():
    est = norm2_estimate(np.diag([3.0, 1.0]), tol=1e-4)
    assert est.converged
    assert abs(est.value - 3.0) <= 3e-3


def test_norm2_estimate_t3():
    est = norm2_estimate(laplace_tridiag(3), tol=1e-6)
    assert abs(est.value - (2.0 + np.sqrt(2.0))) <= 1e-4


def test_norm2_estimate_identity():
    est = norm2_estimate(np.eye(5))
    assert abs(est.value - 1.0) <= 1e-10


def test_norm2_estimate_unconverged_flag():
    # an unsatisfiable tolerance exhausts maxit and flags the estimate
    a = np.diag([1.0, 1.0 - 1e-12])
    est = norm2_estimate(a, tol=-1.0, maxit=3)
    assert not est.converged
    assert est.sweeps == 3
    assert abs(est.value - 1.0) <= 1e-6


def test_gepp_identity(rng):
    b = rng.standard_normal(4)
    assert np.array_equal(gepp_solve(np.eye(4), b), b)


def test_gepp_2x2():
    x = gepp_solve(np.array([[2.0, 1.0], [1.0, 3.0]]), np.array([3.0, 4.0]))
    assert np.allclose(x, [1.0, 1.0], rtol=1e-15)


def test_gepp_vs_dd_oracle(rng):
    a = rng.standard_normal((30, 30))
    b = rng.standard_normal(30)
    x = gepp_solve(a, b)
    xref = xp_solve(a, b)
    kappa = np.linalg.cond(a, 2)
    assert np.linalg.norm(x - xref) <= kappa * 1e-14 * np.linalg.norm(xref)


def test_gepp_singular():
    with pytest.raises(SingularMatrixError):
        gepp_solve(np.zeros((3, 3)), np.ones(3))


def test_gepp_residual_contract(rng):
    for n in (50, 200):
        a = rng.standard_normal((n, n))
        b = rng.standard_normal(n)
        x = gepp_solve(a, b)
        res = np.linalg.norm(b - a @ x)
        assert res <= 1e-13 * n * np.linalg.norm(a, 2) * np.linalg.norm(x)


def test_band_cholesky_t3_pivots():
    f = band_cholesky(laplace_tridiag(3))
    assert np.allclose(f.pivots(), [2.0, 1.5, 4.0 / 3.0], rtol=1e-15)


def test_band_cholesky_diagonal():
    M = BandMatrix.from_diagonals(2, {0: np.array([4.0, 9.0])})
    f = band_cholesky(M)
    assert np.array_equal(f.bands[:, 0], [2.0, 3.0])


def test_band_cholesky_not_spd():
    M = BandMatrix.from_diagonals(2, {0: np.array([1.0, -1.0])})
    with pytest.raises(NotPositiveDefiniteError):
        band_cholesky(M)


def test_band_chol_solve_t8_analytic():
    n = 8
    T = laplace_tridiag(n)
    f = band_cholesky(T)
    kappa = (2 + 2 * np.cos(np.pi / (n + 1))) / (2 - 2 * np.cos(np.pi / (n + 1)))
    for j in (0, 3, 7):
        e = np.zeros(n)
        e[j] = 1.0
        x = band_chol_solve(f, e)
        col = tinv_column(n, j)
        assert np.linalg.norm(x - col) <= kappa * 1e-14 * np.linalg.norm(col)


@pytest.mark.parametrize("n", [100, 1000])
def test_band_chol_columns_invariant(n, rng):
    T = laplace_tridiag(n)
    f = band_cholesky(T)
    for j in rng.integers(0, n, size=3):
        e = np.zeros(n)
        e[j] = 1.0
        x = band_chol_solve(f, e)
        col = tinv_column(n, int(j))
        rel = np.linalg.norm(x - col) / np.linalg.norm(col)
        assert rel <= n * 1e-13


def test_band_matrix_immutable():
    T = laplace_tridiag(4)
    with pytest.raises(ValueError):
        T.bands[0, 0] = 5.0


def test_band_transpose_roundtrip(rng):
    b = BandMatrix.from_diagonals(6, {-2: 1.0, 0: 4.0, 1: rng.standard_normal(6)})
    assert np.array_equal(b.transpose().to_dense(), b.to_dense().T)
    assert np.array_equal(b.to_csr().to_dense(), b.to_dense())


def test_sparse_invariants():
    with pytest.raises(ValueError):
        SparseMatrix(2, 2, np.array([0, 2, 2]), np.array([1, 0]),
                     np.array([1.0, 2.0]))  # columns not increasing
    S = SparseMatrix.from_coo(2, 2, [0, 1, 0], [1, 0, 1], [1.0, 2.0, 3.0])
    assert S.nnz == 2  # duplicates summed
    assert S.to_dense()[0, 1] == 4.0


def test_linop_transpose():
    a = np.array([[1.0, 2.0], [0.0, 3.0]])
    op = aslinop(a)
    v = np.array([1.0, 1.0])
    assert np.allclose(op.t_apply(v), a.T @ v)
    op2 = LinOp(2, lambda x: a @ x)
    with pytest.raises(ValueError):
        op2.t_apply(v)
