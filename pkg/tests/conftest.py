import numpy as np
import pytest

from accuprec.core import SparseMatrix
from accuprec.dominant import DominantRep


def random_dominant_rep(rng, n, strict=True, max_off=9, density=0.6):
    """Random strictly row-dominant integer representation (CSR offdiag)."""
    rows, cols, vals = [], [], []
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < density:
                v = int(rng.integers(-max_off, max_off + 1))
                if v:
                    rows.append(i)
                    cols.append(j)
                    vals.append(float(v))
    off = SparseMatrix.from_coo(n, n, rows, cols, vals)
    v = rng.integers(1 if strict else 0, 6, size=n).astype(float)
    return DominantRep(off, v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
