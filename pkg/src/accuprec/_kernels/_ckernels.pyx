# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: accurate banded/dense LDU elimination, banded triangular
solves, banded Cholesky, and band/CSR matrix-vector products.

Floating-point operation order matches ``_pykernels.py`` exactly so the two
backends agree bit for bit.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND = "compiled"


cdef inline double _g(double s, double t) nogil:
    if s == 0.0 or t == 0.0 or ((s > 0.0) != (t > 0.0)):
        return 0.0
    cdef double a = fabs(s)
    cdef double b = fabs(t)
    return 2.0 * (a if a < b else b)


cdef inline double _p(double l, double c) nogil:
    if l == 0.0 or c == 0.0 or ((l > 0.0) == (c > 0.0)):
        return 0.0
    return 2.0 * fabs(l) * fabs(c)


def band_matvec(const double[:, ::1] bands, int lbw, int ubw, const double[::1] x):
    cdef Py_ssize_t n = bands.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yarr = np.zeros(n)
    cdef double[::1] y = yarr
    cdef Py_ssize_t i, j, jlo, jhi
    cdef double acc
    with nogil:
        for i in range(n):
            jlo = i - lbw
            if jlo < 0:
                jlo = 0
            jhi = i + ubw
            if jhi > n - 1:
                jhi = n - 1
            acc = 0.0
            for j in range(jlo, jhi + 1):
                acc += bands[i, j - i + lbw] * x[j]
            y[i] = acc
    return yarr


def csr_matvec(const long long[::1] indptr, const long long[::1] indices,
               const double[::1] data, const double[::1] x, Py_ssize_t n_rows):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yarr = np.zeros(n_rows)
    cdef double[::1] y = yarr
    cdef Py_ssize_t i, t
    cdef double acc
    with nogil:
        for i in range(n_rows):
            acc = 0.0
            for t in range(indptr[i], indptr[i + 1]):
                acc += data[t] * x[indices[t]]
            y[i] = acc
    return yarr


def band_accurate_ldu(const double[:, ::1] off_bands, const double[::1] v,
                      int lbw, int ubw):
    """Accurate LDU of a banded diagonally dominant representation.

    See the fallback docstring for the layout; returns
    (Lsub, d, Usup, min_dominance).
    """
    cdef Py_ssize_t n = off_bands.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] workarr = np.array(off_bands, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vwarr = np.array(v, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Lbarr = np.zeros((n, lbw))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Ubarr = np.zeros((n, ubw))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] darr = np.zeros(n)
    cdef double[:, ::1] work = workarr
    cdef double[::1] vw = vwarr
    cdef double[:, ::1] Lb = Lbarr
    cdef double[:, ::1] Ub = Ubarr
    cdef double[::1] d = darr
    cdef Py_ssize_t k, i, j, jmax, imax
    cdef double dk, l, vi, aik, min_v
    cdef Py_ssize_t bad = -1

    if n == 0:
        return Lbarr, darr, Ubarr, 0.0
    min_v = vw[0]
    with nogil:
        for k in range(n):
            if vw[k] < min_v:
                min_v = vw[k]
        for k in range(n - 1):
            dk = vw[k]
            jmax = k + ubw
            if jmax > n - 1:
                jmax = n - 1
            for j in range(k + 1, jmax + 1):
                dk += fabs(work[k, j - k + lbw])
            if dk == 0.0:
                bad = k
                break
            d[k] = dk

            imax = k + lbw
            if imax > n - 1:
                imax = n - 1
            for i in range(k + 1, imax + 1):
                aik = work[i, k - i + lbw]
                if aik == 0.0:
                    continue
                l = aik / dk
                Lb[i, k - i + lbw] = l
                vi = vw[i] + fabs(l) * vw[k]
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

        if bad < 0:
            d[n - 1] = vw[n - 1]
            if vw[n - 1] < min_v:
                min_v = vw[n - 1]
    if bad >= 0:
        from ..errors import SingularMatrixError
        raise SingularMatrixError(index=bad)
    return Lbarr, darr, Ubarr, min_v


def dense_accurate_ldu(const double[:, ::1] off, const double[::1] v):
    cdef Py_ssize_t n = off.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] workarr = np.array(off, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vwarr = np.array(v, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Larr = np.eye(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Uarr = np.eye(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] darr = np.zeros(n)
    cdef double[:, ::1] work = workarr
    cdef double[::1] vw = vwarr
    cdef double[:, ::1] L = Larr
    cdef double[:, ::1] U = Uarr
    cdef double[::1] d = darr
    cdef Py_ssize_t k, i, j
    cdef double dk, l, vi, aik, min_v
    cdef Py_ssize_t bad = -1

    if n == 0:
        return Larr, darr, Uarr, 0.0
    min_v = vw[0]
    with nogil:
        for k in range(n):
            if vw[k] < min_v:
                min_v = vw[k]
        for k in range(n - 1):
            dk = vw[k]
            for j in range(k + 1, n):
                dk += fabs(work[k, j])
            if dk == 0.0:
                bad = k
                break
            d[k] = dk

            for i in range(k + 1, n):
                aik = work[i, k]
                if aik == 0.0:
                    continue
                l = aik / dk
                L[i, k] = l
                vi = vw[i] + fabs(l) * vw[k]
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

        if bad < 0:
            d[n - 1] = vw[n - 1]
            if vw[n - 1] < min_v:
                min_v = vw[n - 1]
    if bad >= 0:
        from ..errors import SingularMatrixError
        raise SingularMatrixError(index=bad)
    return Larr, darr, Uarr, min_v


def band_unit_lower_solve(const double[:, ::1] Lb, int lbw, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.array(b, copy=True)
    cdef double[::1] x = xarr
    cdef Py_ssize_t i, j, lo
    cdef double s
    with nogil:
        for i in range(n):
            lo = i - lbw
            if lo < 0:
                lo = 0
            s = x[i]
            for j in range(lo, i):
                s -= Lb[i, j - i + lbw] * x[j]
            x[i] = s
    return xarr


def band_unit_upper_solve(const double[:, ::1] Ub, int ubw, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.array(b, copy=True)
    cdef double[::1] x = xarr
    cdef Py_ssize_t i, j, hi
    cdef double s
    with nogil:
        for i in range(n - 1, -1, -1):
            hi = i + ubw
            if hi > n - 1:
                hi = n - 1
            s = x[i]
            for j in range(i + 1, hi + 1):
                s -= Ub[i, j - i - 1] * x[j]
            x[i] = s
    return xarr


def dense_unit_lower_solve(const double[:, ::1] L, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.array(b, copy=True)
    cdef double[::1] x = xarr
    cdef Py_ssize_t i, j
    cdef double s
    with nogil:
        for i in range(1, n):
            s = 0.0
            for j in range(i):
                s += L[i, j] * x[j]
            x[i] = x[i] - s
    return xarr


def dense_unit_upper_solve(const double[:, ::1] U, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.array(b, copy=True)
    cdef double[::1] x = xarr
    cdef Py_ssize_t i, j
    cdef double s
    with nogil:
        for i in range(n - 2, -1, -1):
            s = 0.0
            for j in range(i + 1, n):
                s += U[i, j] * x[j]
            x[i] = x[i] - s
    return xarr


def band_chol_factor(const double[:, ::1] lower_bands, int lbw):
    cdef Py_ssize_t n = lower_bands.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Lbarr = np.zeros((n, lbw + 1))
    cdef double[:, ::1] Lb = Lbarr
    cdef Py_ssize_t i, j, k, lo, kmin
    cdef double s
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            lo = i - lbw
            if lo < 0:
                lo = 0
            for j in range(lo, i + 1):
                s = lower_bands[i, j - i + lbw]
                kmin = j - lbw
                if kmin < lo:
                    kmin = lo
                for k in range(kmin, j):
                    s -= Lb[i, k - i + lbw] * Lb[j, k - j + lbw]
                if j < i:
                    Lb[i, j - i + lbw] = s / Lb[j, lbw]
                else:
                    if s <= 0.0:
                        bad = i
                        break
                    Lb[i, lbw] = sqrt(s)
            if bad >= 0:
                break
    if bad >= 0:
        from ..errors import NotPositiveDefiniteError
        raise NotPositiveDefiniteError(bad)
    return Lbarr


def band_chol_lower_solve(const double[:, ::1] Lb, int lbw, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.array(b, copy=True)
    cdef double[::1] x = xarr
    cdef Py_ssize_t i, j, lo
    cdef double s
    with nogil:
        for i in range(n):
            lo = i - lbw
            if lo < 0:
                lo = 0
            s = x[i]
            for j in range(lo, i):
                s -= Lb[i, j - i + lbw] * x[j]
            x[i] = s / Lb[i, lbw]
    return xarr


def band_chol_lowerT_solve(const double[:, ::1] Lb, int lbw, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xarr = np.array(b, copy=True)
    cdef double[::1] x = xarr
    cdef Py_ssize_t i, j, hi
    cdef double s
    with nogil:
        for i in range(n - 1, -1, -1):
            hi = i + lbw
            if hi > n - 1:
                hi = n - 1
            s = x[i]
            for j in range(i + 1, hi + 1):
                s -= Lb[j, i - j + lbw] * x[j]
            x[i] = s / Lb[i, lbw]
    return xarr
