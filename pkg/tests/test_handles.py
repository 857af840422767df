import numpy as np
import pytest

from accuprec.core import band_cholesky
from accuprec.dominant import accurate_ldu, from_assembled
from accuprec.errors import SingularMatrixError
from accuprec.handles import (CholeskyStep, DiagonalStep, ExplicitInverseStep,
                              LduStep, PrecondHandle, explicit_inverse_apply,
                              handle_diagnostics, handle_solve,
                              invert_via_handle, ldu_solve)
from accuprec.testbed import laplace_tridiag, tinv_column, tinv_norm2
from accuprec.xprec import dd_to_float, xp_matvec


def _t_factors(n):
    return accurate_ldu(from_assembled(laplace_tridiag(n)))


def test_ldu_solve_t3():
    x = ldu_solve(_t_factors(3), np.array([1.0, 0.0, 0.0]))
    assert np.allclose(x, [0.75, 0.5, 0.25], rtol=1e-15)


def test_ldu_solve_diagonal_factors():
    from accuprec.dominant import DominantRep
    f = accurate_ldu(DominantRep(np.zeros((2, 2)), np.array([2.0, 4.0])))
    assert np.array_equal(ldu_solve(f, np.array([2.0, 4.0])), [1.0, 1.0])


def test_ldu_solve_zero_pivot():
    from accuprec.dominant import LduFactors
    f = LduFactors(n=2, d=np.array([1.0, 0.0]), min_dominance=0.0,
                   L=np.eye(2), U=np.eye(2))
    with pytest.raises(SingularMatrixError):
        ldu_solve(f, np.ones(2))


def test_ldu_solve_t1000_analytic_column(rng):
    n = 1000
    f = _t_factors(n)
    for j in rng.integers(0, n, size=3):
        e = np.zeros(n)
        e[j] = 1.0
        x = ldu_solve(f, e)
        col = tinv_column(n, int(j))
        assert np.linalg.norm(x - col) <= 1e-12 * np.linalg.norm(col)


def test_handle_diagonal():
    h = PrecondHandle(1.0, (DiagonalStep(np.array([2.0, 2.0])),))
    assert np.array_equal(handle_solve(h, np.array([4.0, 4.0])), [2.0, 2.0])


def test_handle_tsq_chain_integer_rhs():
    # M = (n+1)^4 T^2 at n=3: alpha = 256, chain [T, T]
    n = 3
    T = laplace_tridiag(n).to_dense()
    f = _t_factors(n)
    h = PrecondHandle(256.0, (LduStep(f), LduStep(f)))
    ones = np.ones(n)
    b = 256.0 * (T @ (T @ ones))  # exact small integers
    x = handle_solve(h, b)
    assert np.linalg.norm(x - ones) <= 1e-13 * np.linalg.norm(ones)


def test_handle_explicit_inverse_alpha():
    h = PrecondHandle(2.0, (ExplicitInverseStep(np.eye(1)),))
    assert handle_solve(h, np.array([2.0]))[0] == 1.0


def test_handle_zero_maps_to_zero():
    n = 6
    f = _t_factors(n)
    chol = CholeskyStep(band_cholesky(laplace_tridiag(n)))
    for h in (PrecondHandle(3.0, (LduStep(f), LduStep(f))),
              PrecondHandle(2.0, (chol,)),
              PrecondHandle(1.0, (DiagonalStep(np.arange(1.0, n + 1)),))):
        assert np.array_equal(handle_solve(h, np.zeros(n)), np.zeros(n))


def test_chain_single_step_bitwise():
    n = 12
    f = _t_factors(n)
    b = np.linspace(-1, 1, n)
    h = PrecondHandle(1.0, (LduStep(f),))
    assert np.array_equal(handle_solve(h, b), ldu_solve(f, b))


def test_explicit_inverse_apply_examples(rng):
    b = rng.standard_normal(3)
    assert np.array_equal(explicit_inverse_apply(np.eye(3), b), b)
    n = 3
    Tinv = np.column_stack([tinv_column(n, j) for j in range(n)])
    x = explicit_inverse_apply(Tinv, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(x, [0.75, 0.5, 0.25], rtol=1e-15)
    v = rng.standard_normal(3)
    ref = dd_to_float(xp_matvec(Tinv, v))
    got = explicit_inverse_apply(Tinv, v)
    assert np.linalg.norm(got - ref) <= 1e-14 * np.linalg.norm(ref)


def test_invert_via_handle_diagonal():
    h = PrecondHandle(1.0, (DiagonalStep(np.array([2.0, 4.0])),))
    assert np.array_equal(invert_via_handle(h), np.diag([0.5, 0.25]))


def test_inverse_equivalence_property(rng):
    # the module's defining property, on T_n solves
    n = 1000
    f = _t_factors(n)
    h = PrecondHandle(1.0, (LduStep(f),))
    Tinv = np.column_stack([tinv_column(n, j) for j in range(n)])
    denom = tinv_norm2(n)
    worst = 0.0
    for _ in range(20):
        b = rng.standard_normal(n)
        b /= np.linalg.norm(b)
        xhat = handle_solve(h, b)
        xref = dd_to_float(xp_matvec(Tinv, b))
        worst = max(worst, np.linalg.norm(xhat - xref) / denom)
    assert worst <= 1e-13


def test_handle_diagnostics_ratio():
    n = 16
    f = _t_factors(n)
    h = PrecondHandle(1.0, (LduStep(f), LduStep(f)))
    d = handle_diagnostics(h)
    assert d["chain_ratio"] >= 1.0 - 1e-12
    assert d["chain_ratio"] < 50.0  # modest for T^2
