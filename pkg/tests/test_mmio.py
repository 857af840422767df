import numpy as np
import pytest

from accuprec.core import SparseMatrix
from accuprec.errors import ParseError
from accuprec.mmio import mm_read, mm_read_vector, mm_write, mm_write_vector
from accuprec.testbed import laplace_tridiag


def test_t3_roundtrip(tmp_path):
    T3 = laplace_tridiag(3)
    path = tmp_path / "t3.mtx"
    mm_write(T3, path)
    back = mm_read(path)
    assert np.array_equal(back.to_dense(), T3.to_dense())
    assert "integer" in path.read_text().splitlines()[0]


def test_1x1_roundtrip(tmp_path):
    A = SparseMatrix.from_coo(1, 1, [0], [0], [5.0])
    path = tmp_path / "one.mtx"
    mm_write(A, path)
    assert mm_read(path).to_dense()[0, 0] == 5.0


def test_float_values_roundtrip(tmp_path, rng):
    a = rng.standard_normal((5, 4))
    a[a < -0.5] = 0.0
    rows, cols = np.nonzero(a)
    A = SparseMatrix.from_coo(5, 4, rows, cols, a[rows, cols])
    path = tmp_path / "f.mtx"
    mm_write(A, path)
    back = mm_read(path)
    assert np.array_equal(back.data, A.data)  # bitwise
    assert "real" in path.read_text().splitlines()[0]


def test_wrong_entry_count(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 3\n1 1 1.0\n2 2 2.0\n")
    with pytest.raises(ParseError) as exc:
        mm_read(path)
    assert exc.value.line is not None


def test_bad_header(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%MatrixMarket matrix coordinate real general\n1 1 0\n")
    with pytest.raises(ParseError) as exc:
        mm_read(path)
    assert exc.value.line == 1


def test_out_of_range_entry(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 1\n3 1 1.0\n")
    with pytest.raises(ParseError):
        mm_read(path)


def test_unsupported_field(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate complex general\n"
                    "1 1 1\n1 1 1.0 0.0\n")
    with pytest.raises(ParseError):
        mm_read(path)


def test_symmetric_expansion(tmp_path):
    path = tmp_path / "sym.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                    "3 3 3\n1 1 2.0\n2 1 -1.0\n3 3 2.0\n")
    A = mm_read(path)
    d = A.to_dense()
    assert d[0, 1] == d[1, 0] == -1.0
    assert d[0, 0] == 2.0 and d[2, 2] == 2.0


def test_vector_roundtrip(tmp_path, rng):
    x = rng.standard_normal(6)
    path = tmp_path / "v.mtx"
    mm_write_vector(x, path)
    assert np.array_equal(mm_read_vector(path), x)
