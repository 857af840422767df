"""accuprec: accurate preconditioning for ill-conditioned linear systems.

Solves A x = b to inverse-equivalent accuracy (error bounded by
O(u) ||A^{-1}|| ||b||, independent of kappa(A)) by splitting A = M + K with a
diagonally dominant preconditioner M whose accurate LDU factorization makes
M^{-1} applicable at that accuracy; the well-conditioned system
(I + M^{-1}K) x = M^{-1}b is then solved directly or by Krylov iteration.
The same machinery drives an inverse-iteration eigensolver that computes
smallest eigenvalues of extremely ill-conditioned matrices to machine
precision.  A double-double oracle validates the working-precision paths.

Hot kernels run in a compiled extension when available; see
accuprec.backend() and benchmarks/bench_kernels.py.
"""
from ._kernels import BACKEND as _BACKEND
from .core import (BandMatrix, LinOp, SparseMatrix, band_cholesky,
                   band_chol_solve, gepp_solve, norm, norm2_estimate, spmv)
from .dominant import (DominantRep, LduFactors, accurate_ldu, assemble,
                       from_assembled, g_term, p_term)
from .eigs import EigReport, inverse_iteration, lanczos_smallest
from .handles import (CholeskyStep, DiagonalStep, ExplicitInverseStep,
                      LduStep, PrecondHandle, explicit_inverse_apply,
                      handle_solve, invert_via_handle, ldu_solve)
from .krylov import KrylovConfig, SolveReport, cg, default_config, gmres, minres
from .mmio import mm_read, mm_write
from .precond import (SplitSystem, apply_preconditioned,
                      form_preconditioned_dense, solve_direct,
                      solve_iterative, split_from)
from .testbed import ExperimentCase, MetricSet, gen_case, make_exact_rhs, metrics

__version__ = "0.1.0"


def backend() -> str:
    """Name of the active kernel backend: "compiled" or "python"."""
    return _BACKEND
