"""Matrix Market coordinate I/O (real/integer fields, general/symmetric).

Values round-trip exactly: floats are written with shortest round-trip
decimals, integers as integers.  Symmetric files are expanded to general
storage on read.  Indices are 1-based in the file, 0-based in memory.
"""
from __future__ import annotations

import numpy as np

from .core import SparseMatrix
from .errors import ParseError

_HEADER = "%%MatrixMarket"


def mm_read(path) -> SparseMatrix:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != _HEADER:
        raise ParseError("bad MatrixMarket header", line=1)
    _, obj, fmt, field, sym = (t.lower() for t in head)
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(f"unsupported object/format {obj}/{fmt}", line=1)
    if field not in ("real", "integer"):
        raise ParseError(f"unsupported field {field!r}", line=1)
    if sym not in ("general", "symmetric"):
        raise ParseError(f"unsupported symmetry {sym!r}", line=1)

    k = 1
    while k < len(lines) and (lines[k].startswith("%") or not lines[k].strip()):
        k += 1
    if k >= len(lines):
        raise ParseError("missing size line", line=len(lines))
    parts = lines[k].split()
    if len(parts) != 3:
        raise ParseError("size line must be 'rows cols nnz'", line=k + 1)
    try:
        n_rows, n_cols, nnz = (int(p) for p in parts)
    except ValueError as exc:
        raise ParseError(f"bad size line: {exc}", line=k + 1) from exc

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    count = 0
    for ln in range(k + 1, len(lines)):
        text = lines[ln].strip()
        if not text or text.startswith("%"):
            continue
        if count >= nnz:
            raise ParseError("more entries than declared", line=ln + 1)
        parts = text.split()
        if len(parts) != 3:
            raise ParseError("entry must be 'row col value'", line=ln + 1)
        try:
            i, j = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError as exc:
            raise ParseError(f"bad entry: {exc}", line=ln + 1) from exc
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise ParseError(f"index ({i},{j}) out of range", line=ln + 1)
        rows[count], cols[count], vals[count] = i - 1, j - 1, v
        count += 1
    if count != nnz:
        raise ParseError(f"declared {nnz} entries, found {count}",
                         line=len(lines))

    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals,
                                 sum_duplicates=False)


def _fmt_value(v: float, as_int: bool) -> str:
    if as_int:
        return str(int(v))
    return repr(float(v))


def mm_write(A, path, comment: str = "", field: str = "auto") -> None:
    """Write a matrix in coordinate format.

    field "auto" picks integer when all stored values are integral and
    safely representable, else real.  BandMatrix/dense input is converted.
    """
    if not isinstance(A, SparseMatrix):
        if hasattr(A, "to_csr"):
            A = A.to_csr()
        else:
            a = np.asarray(A, dtype=np.float64)
            r, c = np.nonzero(a)
            A = SparseMatrix.from_coo(a.shape[0], a.shape[1], r, c, a[r, c],
                                      sum_duplicates=False)
    if field == "auto":
        intish = (len(A.data) == 0 or
                  (np.all(A.data == np.round(A.data)) and
                   np.all(np.abs(A.data) < 2.0 ** 53)))
        field = "integer" if intish else "real"
    if field not in ("real", "integer"):
        raise ValueError(f"unsupported field {field!r}")
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        as_int = field == "integer"
        for i in range(A.n_rows):
            for t in range(A.indptr[i], A.indptr[i + 1]):
                fh.write(f"{i + 1} {A.indices[t] + 1} "
                         f"{_fmt_value(A.data[t], as_int)}\n")


def mm_write_vector(x, path, comment: str = "") -> None:
    """Write a vector as an n-by-1 coordinate matrix."""
    x = np.asarray(x, dtype=np.float64)
    rows = np.arange(len(x), dtype=np.int64)
    A = SparseMatrix.from_coo(len(x), 1, rows, np.zeros_like(rows), x,
                              sum_duplicates=False)
    mm_write(A, path, comment=comment)


def mm_read_vector(path) -> np.ndarray:
    A = mm_read(path)
    if A.n_cols != 1:
        raise ParseError("expected an n-by-1 vector file")
    out = np.zeros(A.n_rows)
    for i in range(A.n_rows):
        sl = slice(A.indptr[i], A.indptr[i + 1])
        if A.indptr[i + 1] > A.indptr[i]:
            out[i] = A.data[sl][0]
    return out
