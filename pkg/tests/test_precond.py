import numpy as np
import pytest

from accuprec.core import SparseMatrix
from accuprec.dominant import accurate_ldu, from_assembled
from accuprec.errors import RefuseInexactSplitError
from accuprec.handles import DiagonalStep, LduStep, PrecondHandle, handle_solve
from accuprec.krylov import default_config
from accuprec.precond import (SplitSystem, apply_preconditioned,
                              form_preconditioned_dense, solve_direct,
                              solve_iterative, split_from)
from accuprec.testbed import (gen_case, laplace_tridiag, make_exact_rhs,
                              metrics, skew_diff_tridiag)
from accuprec.xprec import xp_solve
from conftest import random_dominant_rep


def _t_handle(n, alpha=1.0, chain=1):
    f = accurate_ldu(from_assembled(laplace_tridiag(n)))
    return PrecondHandle(alpha, tuple([LduStep(f)] * chain))


def test_split_from_ex1():
    n, gamma = 8, 3.0
    case = gen_case("ex1", n, gamma)
    sys_ = split_from(case.A_csr, case.handle("accurate"), case.M_band,
                      np.ones(n))
    expect = skew_diff_tridiag(n).scaled(-gamma).to_csr()
    assert np.array_equal(sys_.K.to_dense(), expect.to_dense())


def test_split_from_a_equals_m():
    n = 6
    case = gen_case("ex1", n, 0.0)
    sys_ = split_from(case.A_csr, case.handle("accurate"), case.M_band,
                      np.ones(n))
    assert sys_.K.nnz == 0


def test_split_from_ex2_recovers_gamma_s():
    case = gen_case("ex2", 32, 7.0, seed=5)
    sys_ = split_from(case.A_csr, case.handle("accurate"), case.M_band,
                      np.ones(32))
    assert np.array_equal(sys_.K.to_dense(), case.K.to_dense())


def test_split_from_refuses_floats():
    n = 4
    A = laplace_tridiag(n).scaled(1.5).to_csr()
    h = _t_handle(n)
    with pytest.raises(RefuseInexactSplitError):
        split_from(A, h, laplace_tridiag(n), np.ones(n))


def test_apply_preconditioned_k_zero_bitwise(rng):
    n = 9
    sys_ = SplitSystem(_t_handle(n), SparseMatrix.zeros(n, n), np.zeros(n), n)
    v = rng.standard_normal(n)
    assert np.array_equal(apply_preconditioned(sys_, v), v)


def test_apply_preconditioned_linearity(rng):
    case = gen_case("ex1", 16, 2.0)
    sys_ = case.system(np.zeros(16))
    v = rng.standard_normal(16)
    one = apply_preconditioned(sys_, v)
    two = apply_preconditioned(sys_, 2.0 * v)
    assert np.linalg.norm(two - 2.0 * one) <= 1e-14 * np.linalg.norm(two)


def test_apply_preconditioned_ex4_vs_oracle():
    n, rho = 3, 1.0
    case = gen_case("ex4", n, rho)
    sys_ = case.system(np.zeros(n))
    ones = np.ones(n)
    got = apply_preconditioned(sys_, ones)
    Minv_rho = xp_solve(case.M_band.to_dense(), rho * ones)
    expect = ones + Minv_rho
    assert np.linalg.norm(got - expect) <= 1e-14 * np.linalg.norm(expect)


def test_form_dense_k_zero():
    n = 5
    b = np.arange(1.0, n + 1)
    sys_ = SplitSystem(_t_handle(n), SparseMatrix.zeros(n, n), b, n)
    B, c = form_preconditioned_dense(sys_)
    assert np.array_equal(B, np.eye(n))
    assert np.array_equal(c, handle_solve(sys_.M, b))


def test_form_dense_halves():
    h = PrecondHandle(1.0, (DiagonalStep(np.array([2.0, 2.0])),))
    K = SparseMatrix.from_coo(2, 2, [0, 1], [1, 0], [1.0, 1.0])
    sys_ = SplitSystem(h, K, np.array([2.0, 2.0]), 2)
    B, c = form_preconditioned_dense(sys_)
    assert np.array_equal(B, [[1.0, 0.5], [0.5, 1.0]])
    assert np.array_equal(c, [1.0, 1.0])


def test_form_dense_matches_operator(rng):
    case = gen_case("ex2", 64, 5.0, seed=2)
    sys_ = case.system(np.zeros(64))
    B, _ = form_preconditioned_dense(sys_)
    for _ in range(3):
        v = rng.standard_normal(64)
        dense = B @ v
        op = apply_preconditioned(sys_, v)
        assert np.linalg.norm(dense - op) <= 1e-13 * np.linalg.norm(op)


def test_solve_direct_k_zero_is_handle_solve(rng):
    n = 12
    b = rng.standard_normal(n)
    h = _t_handle(n)
    sys_ = SplitSystem(h, SparseMatrix.zeros(n, n), b, n,
                       M_assembled=laplace_tridiag(n))
    rep = solve_direct(sys_)
    direct = handle_solve(h, b)
    assert np.linalg.norm(rep.x - direct) <= 1e-14 * np.linalg.norm(direct)
    assert rep.true_residual <= 1e-12 * np.linalg.norm(b)


def test_solve_direct_vs_oracle(rng):
    # random dd M plus a small integer K at n=64
    n = 64
    rep_m = random_dominant_rep(rng, n, max_off=4)
    from accuprec.dominant import assemble
    M_csr = assemble(rep_m)
    f = accurate_ldu(rep_m)
    h = PrecondHandle(1.0, (LduStep(f),))
    K = SparseMatrix.from_coo(
        n, n, rng.integers(0, n, 30), rng.integers(0, n, 30),
        rng.integers(-2, 3, 30).astype(float))
    A = M_csr.to_dense() + K.to_dense()
    b = rng.standard_normal(n)
    sys_ = SplitSystem(h, K, b, n, M_assembled=M_csr)
    rep = solve_direct(sys_)
    xref = xp_solve(A, b)
    denom = np.linalg.norm(np.linalg.inv(A), 2) * np.linalg.norm(b)
    assert np.linalg.norm(rep.x - xref) <= 1e-13 * denom
    assert "kappa1_B_est" in rep.info and rep.info["kappa1_B_est"] >= 1.0


def test_solve_direct_ex1_exact_protocol():
    n = 511
    case = gen_case("ex1", n, 10.0, seed=3)
    x_exact, b, _ = make_exact_rhs(
        case.A_int, 3, case.solve_fn("accurate", default_config(n, tol=1e-8)))
    rep = solve_direct(case.system(b, "accurate"))
    from accuprec.testbed import norm_Ainv_estimate, _transposed_case
    solve = case.solve_fn("accurate", default_config(n, tol=1e-8))
    solve_t = _transposed_case(case).solve_fn("accurate",
                                              default_config(n, tol=1e-8))
    nAinv = norm_Ainv_estimate(solve, n, solve_t=solve_t)
    m = metrics(rep.x, x_exact, b, nAinv, case.K)
    assert m.eta_ie <= 1e-13


def test_solve_iterative_k_zero_one_iteration(rng):
    n = 10
    b = rng.standard_normal(n)
    h = _t_handle(n)
    sys_ = SplitSystem(h, SparseMatrix.zeros(n, n), b, n,
                       M_assembled=laplace_tridiag(n))
    rep = solve_iterative(sys_, "gmres")
    assert rep.converged and rep.iterations == 1
    direct = handle_solve(h, b)
    assert np.linalg.norm(rep.x - direct) <= 1e-14 * np.linalg.norm(direct)


def test_solve_iterative_reports_true_residual():
    n = 64
    case = gen_case("ex1", n, 2.0, seed=1)
    b = np.sin(np.arange(1.0, n + 1))
    rep = solve_iterative(case.system(b, "accurate"), "gmres")
    assert rep.converged
    assert rep.true_residual <= 1e-11 * np.linalg.norm(b)
    assert rep.info["method"] == "gmres"


def test_kappa_sandwich_small_n():
    # kappa(A)/kappa(B) <= kappa(M) <= kappa(B) kappa(A) with B = M^{-1}A
    n = 128
    case = gen_case("ex1", n, 4.0, seed=0)
    A = case.A_csr.to_dense()
    M = case.M_band.to_dense()
    B = np.linalg.solve(M, A)
    kA = np.linalg.cond(A, 2)
    kM = np.linalg.cond(M, 2)
    kB = np.linalg.cond(B, 2)
    assert kA / kB <= kM * (1 + 1e-8)
    assert kM <= kB * kA * (1 + 1e-8)


def test_unknown_method():
    n = 4
    sys_ = SplitSystem(_t_handle(n), SparseMatrix.zeros(n, n), np.ones(n), n)
    with pytest.raises(ValueError):
        solve_iterative(sys_, "qmr")


def test_ex1_gmres_converges_within_one_cycle():
    # paper-scale operator, kappa_2(B) ~ 8: well under the restart length
    n = 8191
    case = gen_case("ex1", n, 10.0, seed=0)
    b = np.sin(np.arange(1.0, n + 1))
    rep = solve_iterative(case.system(b, "accurate"), "gmres")
    assert rep.converged and rep.iterations <= 50


def test_ex4_cg_iteration_count():
    n = 4095
    case = gen_case("ex4", n, 1.0, seed=0)
    b = np.cos(np.arange(1.0, n + 1))
    rep = solve_iterative(case.system(b, "accurate"), "cg")
    assert rep.converged and rep.iterations <= 30
