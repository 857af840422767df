"""Kernel backend selection.

Imports the compiled Cython kernels when available, otherwise the
pure-Python fallbacks.  ``ACCUPREC_PURE_PYTHON=1`` forces the fallback.
``BACKEND`` names the active implementation ("compiled" or "python").
"""
import os

if os.environ.get("ACCUPREC_PURE_PYTHON"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND

band_matvec = _impl.band_matvec
csr_matvec = _impl.csr_matvec
band_accurate_ldu = _impl.band_accurate_ldu
dense_accurate_ldu = _impl.dense_accurate_ldu
band_unit_lower_solve = _impl.band_unit_lower_solve
band_unit_upper_solve = _impl.band_unit_upper_solve
dense_unit_lower_solve = _impl.dense_unit_lower_solve
dense_unit_upper_solve = _impl.dense_unit_upper_solve
band_chol_factor = _impl.band_chol_factor
band_chol_lower_solve = _impl.band_chol_lower_solve
band_chol_lowerT_solve = _impl.band_chol_lowerT_solve
