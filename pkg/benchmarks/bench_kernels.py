#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallbacks.

Both implementations are imported side by side, so this runs regardless of
which backend the package selected.  Usage:

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from accuprec._kernels import _pykernels as py

try:
    from accuprec._kernels import _ckernels as cy
except ImportError:
    cy = None


def timeit(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, pyfn, cyfn, repeat, check=None):
    tp, rp = timeit(pyfn, repeat)
    if cy is None:
        print(f"{name:34s} python {tp * 1e3:9.2f} ms   (no compiled backend)")
        return
    tc, rc = timeit(cyfn, repeat)
    note = ""
    if check is not None:
        note = "  [match]" if check(rp, rc) else "  [MISMATCH]"
    print(f"{name:34s} python {tp * 1e3:9.2f} ms   compiled {tc * 1e3:9.2f} ms"
          f"   speedup {tp / tc:7.1f}x{note}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    n = args.n
    rng = np.random.default_rng(0)

    # tridiagonal Laplacian pieces
    off = np.zeros((n, 3))
    off[1:, 0] = -1.0
    off[:-1, 2] = -1.0
    v = np.zeros(n)
    v[0] = v[-1] = 1.0
    x = rng.standard_normal(n)
    tb = off.copy()
    tb[:, 1] = 2.0

    same = lambda a, b: np.array_equal(a, b)
    same_tuple = lambda a, b: all(np.array_equal(p, q) for p, q in zip(a[:3], b[:3]))

    print(f"n = {n}")
    bench("band_matvec (tridiag)",
          lambda: py.band_matvec(tb, 1, 1, x),
          lambda: cy.band_matvec(tb, 1, 1, x), args.repeat, same)

    bench("band_accurate_ldu (tridiag)",
          lambda: py.band_accurate_ldu(off, v, 1, 1),
          lambda: cy.band_accurate_ldu(off, v, 1, 1), args.repeat, same_tuple)

    Lb, d, Ub, _ = (cy or py).band_accurate_ldu(off, v, 1, 1)
    bench("band_unit_lower_solve",
          lambda: py.band_unit_lower_solve(Lb, 1, x),
          lambda: cy.band_unit_lower_solve(Lb, 1, x), args.repeat, same)
    bench("band_unit_upper_solve",
          lambda: py.band_unit_upper_solve(Ub, 1, x),
          lambda: cy.band_unit_upper_solve(Ub, 1, x), args.repeat, same)

    lower = np.zeros((n, 2))
    lower[1:, 0] = -1.0
    lower[:, 1] = 2.0
    bench("band_chol_factor (tridiag)",
          lambda: py.band_chol_factor(lower, 1),
          lambda: cy.band_chol_factor(lower, 1), args.repeat, same)
    Cb = (cy or py).band_chol_factor(lower, 1)
    bench("band_chol solves",
          lambda: py.band_chol_lowerT_solve(Cb, 1, py.band_chol_lower_solve(Cb, 1, x)),
          lambda: cy.band_chol_lowerT_solve(Cb, 1, cy.band_chol_lower_solve(Cb, 1, x)),
          args.repeat, same)

    nnz = 5 * n
    rows = np.repeat(np.arange(n, dtype=np.int64), 5)
    cols = (rows + rng.integers(-3, 4, size=nnz)) % n
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    keep = np.ones(nnz, dtype=bool)
    keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    rows, cols = rows[keep], cols[keep]
    data = rng.standard_normal(len(rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    bench("csr_matvec (~5 nnz/row)",
          lambda: py.csr_matvec(indptr, cols, data, x, n),
          lambda: cy.csr_matvec(indptr, cols, data, x, n), args.repeat, same)

    m = 300
    doff = rng.standard_normal((m, m)) * 0.5
    np.fill_diagonal(doff, 0.0)
    dv = np.abs(doff).sum(axis=1) * 0.1 + 1.0
    bench(f"dense_accurate_ldu (n={m})",
          lambda: py.dense_accurate_ldu(doff, dv),
          lambda: cy.dense_accurate_ldu(doff, dv), 1, same_tuple)


if __name__ == "__main__":
    main()
