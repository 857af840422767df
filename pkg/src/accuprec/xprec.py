"""Double-double oracle arithmetic (~32 significant decimal digits).

A double-double value is an unevaluated sum hi + lo of two binary64 numbers
with |lo| <= half an ulp of hi.  Values are passed around as (hi, lo) pairs
whose components may be scalars or numpy arrays; every operation broadcasts.
Reference computations built on top (matvec, elimination, solve, residual)
validate the working-precision code paths.  Overflow/underflow propagates as
non-finite components; dd_isfinite flags it.
"""
from __future__ import annotations

import numpy as np

from .core import BandMatrix, SparseMatrix, as_dense, as_vector
from .errors import SingularMatrixError

_SPLITTER = 134217729.0  # 2^27 + 1


# ---------------------------------------------------------------------------
# error-free transformations
# ---------------------------------------------------------------------------

def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    # requires |a| >= |b| (or a == 0)
    s = a + b
    return s, b - (s - a)


def split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = split(a)
    bh, bl = split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


# ---------------------------------------------------------------------------
# double-double operations on (hi, lo) pairs
# ---------------------------------------------------------------------------

def dd(x, lo=0.0):
    """Promote a float/array to a double-double pair."""
    hi = np.asarray(x, dtype=np.float64) + 0.0
    return hi, np.zeros_like(hi) + lo


def dd_zeros(shape):
    return np.zeros(shape), np.zeros(shape)


def dd_to_float(a):
    return a[0] + a[1]


def dd_neg(a):
    return -a[0], -a[1]


def dd_add(a, b):
    s1, s2 = two_sum(a[0], b[0])
    t1, t2 = two_sum(a[1], b[1])
    s2 = s2 + t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 = s2 + t2
    return quick_two_sum(s1, s2)


def dd_sub(a, b):
    return dd_add(a, dd_neg(b))


def dd_mul(a, b):
    p, e = two_prod(a[0], b[0])
    e = e + (a[0] * b[1] + a[1] * b[0])
    return quick_two_sum(p, e)


def dd_mul_f(a, f):
    """dd times plain float."""
    p, e = two_prod(a[0], f)
    e = e + a[1] * f
    return quick_two_sum(p, e)


def dd_div(a, b):
    q1 = a[0] / b[0]
    r = dd_sub(a, dd_mul_f(b, q1))
    q2 = r[0] / b[0]
    r = dd_sub(r, dd_mul_f(b, q2))
    q3 = r[0] / b[0]
    s, e = quick_two_sum(q1, q2)
    e = e + q3
    return quick_two_sum(s, e)


def dd_abs(a):
    neg = (a[0] < 0.0) | ((a[0] == 0.0) & (a[1] < 0.0))
    sign = np.where(neg, -1.0, 1.0)
    return a[0] * sign, a[1] * sign


def dd_isfinite(a):
    return np.isfinite(a[0]) & np.isfinite(a[1])


def dd_lt(a, b):
    """Elementwise a < b for dd pairs."""
    return (a[0] < b[0]) | ((a[0] == b[0]) & (a[1] < b[1]))


def dd_sum(a):
    """Sum of a dd array by pairwise tree reduction (order-insensitive at
    double-double accuracy)."""
    hi = np.atleast_1d(np.asarray(a[0], dtype=np.float64)).copy()
    lo = np.atleast_1d(np.asarray(a[1], dtype=np.float64)).copy()
    while len(hi) > 1:
        m = len(hi) // 2
        h2, l2 = dd_add((hi[:m], lo[:m]), (hi[m:2 * m], lo[m:2 * m]))
        if len(hi) % 2:
            h2, l2 = np.append(h2, hi[-1]), np.append(l2, lo[-1])
        hi, lo = h2, l2
    return np.float64(hi[0]), np.float64(lo[0])


def dd_dot(x, y):
    """Exact-product dot of two float vectors, accumulated in dd."""
    p, e = two_prod(np.asarray(x, dtype=np.float64),
                    np.asarray(y, dtype=np.float64))
    return dd_sum((p, e))


def dd_norm2(x):
    """2-norm of a float vector with dd accumulation of squares."""
    s = dd_dot(x, x)
    return float(np.sqrt(dd_to_float(s)))


def dd_diff_norm2(x, y):
    """|| x - y ||_2 with exact differences and dd accumulation."""
    d_hi, d_lo = two_sum(np.asarray(x, dtype=np.float64),
                         -np.asarray(y, dtype=np.float64))
    sq = dd_mul((d_hi, d_lo), (d_hi, d_lo))
    return float(np.sqrt(dd_to_float(dd_sum(sq))))


# ---------------------------------------------------------------------------
# reference matrix-vector products and residuals
# ---------------------------------------------------------------------------

def xp_matvec(A, x):
    """A @ x accumulated in double-double; returns a dd pair of vectors."""
    x = as_vector(x)
    if isinstance(A, BandMatrix):
        acc = dd_zeros(A.n)
        for off in range(-A.lbw, A.ubw + 1):
            lo = max(0, -off)
            hi = A.n - max(0, off)
            p, e = two_prod(A.bands[lo:hi, off + A.lbw], x[lo + off:hi + off])
            seg = dd_add((acc[0][lo:hi], acc[1][lo:hi]), (p, e))
            acc[0][lo:hi], acc[1][lo:hi] = seg
        return acc
    if isinstance(A, SparseMatrix):
        return _xp_csr_matvec(A, x)
    a = as_dense(A)
    acc = dd_zeros(a.shape[0])
    for j in range(a.shape[1]):
        p, e = two_prod(a[:, j], x[j])
        acc = dd_add(acc, (p, e))
    return acc


def _xp_csr_matvec(A: SparseMatrix, x):
    counts = np.diff(A.indptr)
    width = int(counts.max()) if len(counts) else 0
    acc = dd_zeros(A.n_rows)
    if A.nnz == 0 or width == 0:
        return acc
    p, e = two_prod(A.data, x[A.indices])
    # pad products into an (n_rows, width) grid, reduce across slots
    ph = np.zeros((A.n_rows, width))
    pl = np.zeros((A.n_rows, width))
    rows = np.repeat(np.arange(A.n_rows), counts)
    slots = np.arange(A.nnz) - np.repeat(A.indptr[:-1], counts)
    ph[rows, slots] = p
    pl[rows, slots] = e
    hi, lo = ph[:, 0], pl[:, 0]
    for t in range(1, width):
        hi, lo = dd_add((hi, lo), (ph[:, t], pl[:, t]))
    return hi, lo


def xp_residual(A, xhat, b):
    """b - A xhat accumulated in double-double, rounded at the end."""
    b = as_vector(b)
    ax = xp_matvec(A, xhat)
    r = dd_sub((b, np.zeros_like(b)), ax)
    return dd_to_float(r)


def xp_residual_split(M, K, xhat, b, alpha: float = 1.0):
    """b - (alpha*M + K) xhat in double-double for an unassembled system."""
    b = as_vector(b)
    mx = xp_matvec(M, xhat)
    if alpha != 1.0:
        mx = dd_mul_f(mx, alpha)
    kx = xp_matvec(K, xhat) if K is not None else dd_zeros(len(b))
    r = dd_sub((b, np.zeros_like(b)), dd_add(mx, kx))
    return dd_to_float(r)


# ---------------------------------------------------------------------------
# reference dense solve (GEPP carried out in double-double)
# ---------------------------------------------------------------------------

def xp_solve(A, b, return_dd: bool = False):
    """Dense Gaussian elimination with partial pivoting in double-double.

    Treated as an exact reference for kappa_2(A) <= 1e12; capped at n=2048.
    The result is rounded to working precision unless return_dd is set.
    """
    if isinstance(A, (BandMatrix, SparseMatrix)):
        a = A.to_dense()
    else:
        a = as_dense(A).copy()
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise SingularMatrixError("xp_solve needs a square matrix")
    if n > 2048:
        raise ValueError("xp_solve is capped at n=2048")
    x = as_vector(b, n)

    ah, al = a.copy(), np.zeros_like(a)
    bh, bl = x.copy(), np.zeros_like(x)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(ah[k:, k])))
        if ah[piv, k] == 0.0 and al[piv, k] == 0.0:
            raise SingularMatrixError(index=k)
        if piv != k:
            for arr in (ah, al):
                arr[[k, piv]] = arr[[piv, k]]
            for arr in (bh, bl):
                arr[[k, piv]] = arr[[piv, k]]
        pivot = (ah[k, k], al[k, k])
        if k + 1 < n:
            lcol = dd_div((ah[k + 1:, k], al[k + 1:, k]), pivot)
            prod = dd_mul((lcol[0][:, None], lcol[1][:, None]),
                          (ah[k, k + 1:][None, :], al[k, k + 1:][None, :]))
            upd = dd_sub((ah[k + 1:, k + 1:], al[k + 1:, k + 1:]), prod)
            ah[k + 1:, k + 1:], al[k + 1:, k + 1:] = upd
            pb = dd_mul(lcol, (bh[k], bl[k]))
            nb = dd_sub((bh[k + 1:], bl[k + 1:]), pb)
            bh[k + 1:], bl[k + 1:] = nb
            ah[k + 1:, k] = 0.0
            al[k + 1:, k] = 0.0

    xh, xl = np.zeros(n), np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = (bh[i], bl[i])
        if i + 1 < n:
            prod = dd_mul((ah[i, i + 1:], al[i, i + 1:]), (xh[i + 1:], xl[i + 1:]))
            s = dd_sub(s, dd_sum(prod))
        xi = dd_div(s, (ah[i, i], al[i, i]))
        xh[i], xl[i] = xi
    return (xh, xl) if return_dd else xh + xl


# ---------------------------------------------------------------------------
# reference accurate LDU (same recurrences as the kernels, in dd scalars)
# ---------------------------------------------------------------------------

def _sdd(x):
    return (float(x), 0.0)


def _sadd(a, b):
    s1, s2 = two_sum(a[0], b[0])
    t1, t2 = two_sum(a[1], b[1])
    s2 += t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 += t2
    return quick_two_sum(s1, s2)


def _ssub(a, b):
    return _sadd(a, (-b[0], -b[1]))


def _smul(a, b):
    p, e = two_prod(a[0], b[0])
    e += a[0] * b[1] + a[1] * b[0]
    return quick_two_sum(p, e)


def _sdiv(a, b):
    q1 = a[0] / b[0]
    r = _ssub(a, _smul(b, _sdd(q1)))
    q2 = r[0] / b[0]
    r = _ssub(r, _smul(b, _sdd(q2)))
    q3 = r[0] / b[0]
    s, e = quick_two_sum(q1, q2)
    return quick_two_sum(s, e + q3)


def _sabs(a):
    if a[0] < 0.0 or (a[0] == 0.0 and a[1] < 0.0):
        return (-a[0], -a[1])
    return a


def _siszero(a):
    return a[0] == 0.0 and a[1] == 0.0


def _sgn(a):
    if _siszero(a):
        return 0
    return 1 if (a[0] > 0.0 or (a[0] == 0.0 and a[1] > 0.0)) else -1


def _slt(a, b):
    return a[0] < b[0] or (a[0] == b[0] and a[1] < b[1])


def _g_dd(s, t):
    if _sgn(s) == 0 or _sgn(t) == 0 or _sgn(s) != _sgn(t):
        return (0.0, 0.0)
    m = _sabs(s) if _slt(_sabs(s), _sabs(t)) else _sabs(t)
    return _smul(_sdd(2.0), m)


def _p_dd(l, c):
    if _sgn(l) == 0 or _sgn(c) == 0 or _sgn(l) == _sgn(c):
        return (0.0, 0.0)
    return _smul(_sdd(2.0), _smul(_sabs(l), _sabs(c)))


class XpLduResult:
    """Double-double LDU factors plus elimination history.

    ``rounded()`` gives working-precision factors; ``schur_history`` holds,
    per elimination step, the maximum dd-relative gap between
    v_i + sum_j |a_ij| and the classical Schur-complement diagonal.
    """

    def __init__(self, L, d, U, schur_history):
        self.L = L
        self.d = d
        self.U = U
        self.schur_history = schur_history

    def rounded(self):
        to_f = np.vectorize(lambda h, l: h + l)
        return (to_f(self.L[0], self.L[1]), to_f(self.d[0], self.d[1]),
                to_f(self.U[0], self.U[1]))


def xp_accurate_ldu_reference(rep, track_schur: bool = False) -> XpLduResult:
    """Accurate-LDU recurrences carried out in double-double (dense, n<=256).

    Mirrors the working-precision elimination term for term; used as the
    factor-by-factor comparator.  With track_schur=True, also runs the
    classical (cancellation-prone) Schur update in dd and records the
    relative gap between the two diagonal representations after each step.
    """
    off = rep.offdiag_dense()
    v = rep.v
    n = len(v)
    if n > 256:
        raise ValueError("xp_accurate_ldu_reference is capped at n=256")

    a = [[_sdd(off[i, j]) for j in range(n)] for i in range(n)]
    vw = [_sdd(v[i]) for i in range(n)]
    # classical Schur diagonal a_ii, updated the cancellation-prone way
    diag = []
    for i in range(n):
        s = vw[i]
        for j in range(n):
            if j != i:
                s = _sadd(s, _sabs(_sdd(off[i, j])))
        diag.append(s)
    Lh, Ll = np.eye(n), np.zeros((n, n))
    Uh, Ul = np.eye(n), np.zeros((n, n))
    dh, dl = np.zeros(n), np.zeros(n)
    history = []

    for k in range(n - 1):
        dk = vw[k]
        for j in range(k + 1, n):
            dk = _sadd(dk, _sabs(a[k][j]))
        if _siszero(dk):
            raise SingularMatrixError(index=k)
        dh[k], dl[k] = dk

        for i in range(k + 1, n):
            aik = a[i][k]
            if _siszero(aik):
                continue
            l = _sdiv(aik, dk)
            Lh[i, k], Ll[i, k] = l
            vi = _sadd(vw[i], _smul(_sabs(l), vw[k]))
            vi = _sadd(vi, _p_dd(l, a[k][i]))
            for j in range(k + 1, n):
                if j == i:
                    continue
                vi = _sadd(vi, _g_dd(a[i][j], _smul(l, a[k][j])))
            vw[i] = vi
            for j in range(k + 1, n):
                if j == i:
                    continue
                a[i][j] = _ssub(a[i][j], _smul(l, a[k][j]))
            a[i][k] = (0.0, 0.0)
            if track_schur:
                diag[i] = _ssub(diag[i], _smul(l, a[k][i]))

        for j in range(k + 1, n):
            Uh[k, j], Ul[k, j] = _sdiv(a[k][j], dk)

        if track_schur:
            gap = 0.0
            for i in range(k + 1, n):
                s = vw[i]
                for j in range(k + 1, n):
                    if j != i:
                        s = _sadd(s, _sabs(a[i][j]))
                num = _ssub(s, diag[i])
                den = abs(diag[i][0]) + abs(s[0])
                if den > 0.0:
                    gap = max(gap, abs(num[0] + num[1]) / den)
            history.append(gap)

    dh[n - 1], dl[n - 1] = vw[n - 1]
    return XpLduResult((Lh, Ll), (dh, dl), (Uh, Ul), history)
