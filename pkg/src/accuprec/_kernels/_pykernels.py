"""Pure-Python/numpy fallback kernels.

Same contracts and, for the band/CSR/elimination kernels, the same
floating-point operation order as ``_ckernels.pyx``, so those results are
bit-identical across backends.  The dense unit-triangular solves go through
BLAS dots here and may differ from the compiled loop in the last bits.
The sequential recurrences are plain Python loops and are the reason the
compiled backend exists; see ``benchmarks/bench_kernels.py`` for the gap.
"""
import math

import numpy as np

BACKEND = "python"


# ---------------------------------------------------------------------------
# matrix-vector products
# ---------------------------------------------------------------------------

def band_matvec(bands, lbw, ubw, x):
    """y = A x for band storage bands[i, off+lbw] = A[i, i+off].

    Accumulation per row runs over ascending column index.
    """
    n = bands.shape[0]
    y = np.zeros(n)
    for off in range(-lbw, ubw + 1):
        t = off + lbw
        if off < 0:
            y[-off:] += bands[-off:, t] * x[: n + off]
        elif off == 0:
            y += bands[:, t] * x
        else:
            y[: n - off] += bands[: n - off, t] * x[off:]
    return y


def csr_matvec(indptr, indices, data, x, n_rows):
    """y = A x for CSR storage; per-row sums run left to right.

    Accumulates one in-row slot at a time so the addition order matches the
    compiled row loop exactly.
    """
    y = np.zeros(n_rows)
    if len(data) == 0:
        return y
    prod = data * x[indices]
    counts = np.diff(indptr)
    base = indptr[:-1]
    for t in range(int(counts.max())):
        sel = counts > t
        y[sel] += prod[base[sel] + t]
    return y


# ---------------------------------------------------------------------------
# cancellation-free elimination of diagonally dominant representations
# ---------------------------------------------------------------------------

def _g(s, t):
    # |s| + |t| - |s - t| evaluated by branch: 2*min(|s|,|t|) on matching
    # signs, else 0.  Sign tests instead of s*t avoid spurious under/overflow.
    if s == 0.0 or t == 0.0 or ((s > 0.0) != (t > 0.0)):
        return 0.0
    return 2.0 * min(abs(s), abs(t))


def _p(l, c):
    # |l||c| - l*c by branch: 0 unless signs differ.
    if l == 0.0 or c == 0.0 or ((l > 0.0) == (c > 0.0)):
        return 0.0
    return 2.0 * abs(l) * abs(c)


def band_accurate_ldu(off_bands, v, lbw, ubw):
    """Accurate LDU of a banded diagonally dominant representation.

    off_bands holds the off-diagonal entries (diagonal slot ignored), v the
    nonnegative dominance parts.  Each dominance update adds only nonnegative
    terms, read from pre-update entries, so no cancellation ever occurs.
    Returns (Lsub, d, Usup, min_dominance) with Lsub[i, t] = L[i, i-lbw+t]
    and Usup[i, t] = U[i, i+1+t].
    """
    n = off_bands.shape[0]
    work = off_bands.copy()
    vw = v.copy()
    Lb = np.zeros((n, lbw))
    Ub = np.zeros((n, ubw))
    d = np.zeros(n)
    min_v = float(vw.min()) if n else 0.0

    for k in range(n - 1):
        dk = vw[k]
        jmax = min(n - 1, k + ubw)
        for j in range(k + 1, jmax + 1):
            dk += abs(work[k, j - k + lbw])
        if dk == 0.0:
            from ..errors import SingularMatrixError
            raise SingularMatrixError(index=k)
        d[k] = dk

        imax = min(n - 1, k + lbw)
        for i in range(k + 1, imax + 1):
            aik = work[i, k - i + lbw]
            if aik == 0.0:
                continue
            l = aik / dk
            Lb[i, k - i + lbw] = l
            # dominance update, pre-update a_ij values
            vi = vw[i] + abs(l) * vw[k]
            if i - k <= ubw:
                vi += _p(l, work[k, i - k + lbw])
            for j in range(k + 1, jmax + 1):
                if j == i:
                    continue
                vi += _g(work[i, j - i + lbw], l * work[k, j - k + lbw])
            vw[i] = vi
            if vi < min_v:
                min_v = vi
            for j in range(k + 1, jmax + 1):
                if j == i:
                    continue
                work[i, j - i + lbw] -= l * work[k, j - k + lbw]
            work[i, k - i + lbw] = 0.0

        for j in range(k + 1, jmax + 1):
            Ub[k, j - k - 1] = work[k, j - k + lbw] / dk

    d[n - 1] = vw[n - 1]
    if vw[n - 1] < min_v:
        min_v = vw[n - 1]
    return Lb, d, Ub, min_v


def dense_accurate_ldu(off, v):
    """Dense variant of band_accurate_ldu; off is n-by-n with zero diagonal.

    Returns (L, d, U, min_dominance) with unit-triangular L, U.
    """
    n = off.shape[0]
    work = off.copy()
    vw = v.copy()
    L = np.eye(n)
    U = np.eye(n)
    d = np.zeros(n)
    min_v = float(vw.min()) if n else 0.0

    for k in range(n - 1):
        dk = vw[k]
        for j in range(k + 1, n):
            dk += abs(work[k, j])
        if dk == 0.0:
            from ..errors import SingularMatrixError
            raise SingularMatrixError(index=k)
        d[k] = dk

        for i in range(k + 1, n):
            aik = work[i, k]
            if aik == 0.0:
                continue
            l = aik / dk
            L[i, k] = l
            vi = vw[i] + abs(l) * vw[k]
            vi += _p(l, work[k, i])
            for j in range(k + 1, n):
                if j == i:
                    continue
                vi += _g(work[i, j], l * work[k, j])
            vw[i] = vi
            if vi < min_v:
                min_v = vi
            for j in range(k + 1, n):
                if j == i:
                    continue
                work[i, j] -= l * work[k, j]
            work[i, k] = 0.0

        for j in range(k + 1, n):
            U[k, j] = work[k, j] / dk

    d[n - 1] = vw[n - 1]
    if vw[n - 1] < min_v:
        min_v = vw[n - 1]
    return L, d, U, min_v


# ---------------------------------------------------------------------------
# triangular solves
# ---------------------------------------------------------------------------

def band_unit_lower_solve(Lb, lbw, b):
    """Solve L x = b with unit lower-banded L, Lb[i, t] = L[i, i-lbw+t]."""
    n = len(b)
    x = b.copy()
    for i in range(n):
        lo = max(0, i - lbw)
        s = x[i]
        for j in range(lo, i):
            s -= Lb[i, j - i + lbw] * x[j]
        x[i] = s
    return x


def band_unit_upper_solve(Ub, ubw, b):
    """Solve U x = b with unit upper-banded U, Ub[i, t] = U[i, i+1+t]."""
    n = len(b)
    x = b.copy()
    for i in range(n - 1, -1, -1):
        hi = min(n - 1, i + ubw)
        s = x[i]
        for j in range(i + 1, hi + 1):
            s -= Ub[i, j - i - 1] * x[j]
        x[i] = s
    return x


def dense_unit_lower_solve(L, b):
    n = len(b)
    x = b.copy()
    for i in range(1, n):
        x[i] -= L[i, :i] @ x[:i]
    return x


def dense_unit_upper_solve(U, b):
    n = len(b)
    x = b.copy()
    for i in range(n - 2, -1, -1):
        x[i] -= U[i, i + 1:] @ x[i + 1:]
    return x


# ---------------------------------------------------------------------------
# banded Cholesky (baseline comparator)
# ---------------------------------------------------------------------------

def band_chol_factor(lower_bands, lbw):
    """M = L L^T for symmetric banded M given as its lower part.

    lower_bands[i, t] = M[i, i-lbw+t] for t = 0..lbw (t = lbw is the
    diagonal).  Returns the factor in the same layout.  Raises on a
    nonpositive pivot via index in the return flag (caller converts).
    """
    n = lower_bands.shape[0]
    Lb = np.zeros_like(lower_bands)
    for i in range(n):
        lo = max(0, i - lbw)
        for j in range(lo, i + 1):
            s = lower_bands[i, j - i + lbw]
            kmin = max(lo, j - lbw)
            for k in range(kmin, j):
                s -= Lb[i, k - i + lbw] * Lb[j, k - j + lbw]
            if j < i:
                Lb[i, j - i + lbw] = s / Lb[j, lbw]
            else:
                if s <= 0.0:
                    from ..errors import NotPositiveDefiniteError
                    raise NotPositiveDefiniteError(i)
                Lb[i, lbw] = math.sqrt(s)
    return Lb


def band_chol_lower_solve(Lb, lbw, b):
    """Solve L y = b for the band Cholesky factor."""
    n = len(b)
    x = b.copy()
    for i in range(n):
        lo = max(0, i - lbw)
        s = x[i]
        for j in range(lo, i):
            s -= Lb[i, j - i + lbw] * x[j]
        x[i] = s / Lb[i, lbw]
    return x


def band_chol_lowerT_solve(Lb, lbw, b):
    """Solve L^T x = b for the band Cholesky factor."""
    n = len(b)
    x = b.copy()
    for i in range(n - 1, -1, -1):
        hi = min(n - 1, i + lbw)
        s = x[i]
        for j in range(i + 1, hi + 1):
            # L^T[i, j] = L[j, i]
            s -= Lb[j, i - j + lbw] * x[j]
        x[i] = s / Lb[i, lbw]
    return x
