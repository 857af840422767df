"""Inverse-equivalent solve handles.

A PrecondHandle represents M = alpha * F_1 * F_2 * ... * F_m through steps
that each apply one factor inverse.  The chain is stored in
application-of-inverse order: handle_solve computes
t_0 = b / alpha, t_i = F_i^{-1} t_{i-1}, so constructors for products must
list factors in the order their inverses act (reversed from the product).
alpha is applied once, up front; exact when alpha is a power of two.
Handles are immutable; concurrent solves with the same handle are safe.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from . import _kernels as _K
from .core import BandCholFactor, as_dense, as_vector, band_chol_solve
from .dominant import LduFactors
from .errors import DimensionMismatchError, SingularMatrixError

__all__ = ["LduStep", "ExplicitInverseStep", "DiagonalStep", "CholeskyStep",
           "PrecondHandle", "ldu_solve", "handle_solve",
           "explicit_inverse_apply", "invert_via_handle",
           "handle_diagnostics"]


def ldu_solve(f: LduFactors, b: np.ndarray) -> np.ndarray:
    """Solve (L diag(d) U) x = b: forward sweep, pivot divide, back sweep."""
    x = as_vector(b, f.n)
    if np.any(f.d == 0.0):
        raise SingularMatrixError(index=int(np.argmax(f.d == 0.0)))
    if f.banded:
        y = _K.band_unit_lower_solve(f.Lsub, f.lbw, np.ascontiguousarray(x))
        y /= f.d
        return _K.band_unit_upper_solve(f.Usup, f.ubw, y)
    y = _K.dense_unit_lower_solve(f.L, np.ascontiguousarray(x))
    y /= f.d
    return _K.dense_unit_upper_solve(f.U, y)


def explicit_inverse_apply(Minv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Multiply an explicitly available inverse with b (inverse-equivalent
    by construction)."""
    a = as_dense(Minv)
    return a @ as_vector(b, a.shape[1])


@dataclass(frozen=True)
class LduStep:
    factors: LduFactors

    @property
    def n(self):
        return self.factors.n

    def solve(self, b):
        return ldu_solve(self.factors, b)


@dataclass(frozen=True)
class ExplicitInverseStep:
    inverse: np.ndarray

    def __post_init__(self):
        a = as_dense(self.inverse)
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatchError("inverse must be square")

    @property
    def n(self):
        return np.asarray(self.inverse).shape[0]

    def solve(self, b):
        return explicit_inverse_apply(self.inverse, b)


@dataclass(frozen=True)
class DiagonalStep:
    d: np.ndarray

    def __post_init__(self):
        d = as_vector(self.d)
        if np.any(d == 0.0):
            raise SingularMatrixError(index=int(np.argmax(d == 0.0)))
        object.__setattr__(self, "d", d)

    @property
    def n(self):
        return len(self.d)

    def solve(self, b):
        return as_vector(b, self.n) / self.d


@dataclass(frozen=True)
class CholeskyStep:
    """Backward-stable baseline: banded Cholesky behind the same interface."""
    factor: BandCholFactor

    @property
    def n(self):
        return self.factor.n

    def solve(self, b):
        return band_chol_solve(self.factor, b)


Step = Union[LduStep, ExplicitInverseStep, DiagonalStep, CholeskyStep]


@dataclass(frozen=True)
class PrecondHandle:
    """M = alpha * F_1 * ... * F_m with inverse-equivalent factor solves."""
    alpha: float
    steps: Tuple[Step, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("handle chain must be nonempty")
        if self.alpha == 0.0 or not np.isfinite(self.alpha):
            raise ValueError("alpha must be nonzero and finite")
        ns = {s.n for s in self.steps}
        if len(ns) != 1:
            raise DimensionMismatchError("all chain steps must share one size")
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def n(self):
        return self.steps[0].n

    def solve(self, b):
        return handle_solve(self, b)


def handle_solve(h: PrecondHandle, b: np.ndarray) -> np.ndarray:
    """Apply M^{-1} to b through the chain of factor solves."""
    t = as_vector(b, h.n)
    t = t if h.alpha == 1.0 else t / h.alpha
    for step in h.steps:
        t = step.solve(t)
    return t


def invert_via_handle(h: PrecondHandle, max_n: int = 4096) -> np.ndarray:
    """Explicit inverse, solving M X = I column by column."""
    n = h.n
    if n > max_n:
        raise ValueError(f"dense inverse capped at n={max_n}")
    X = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        X[:, j] = handle_solve(h, e)
        e[j] = 0.0
    return X


def handle_diagnostics(h: PrecondHandle, max_n: int = 128) -> dict:
    """Product-handle quality: prod_i ||F_i^{-1}|| / ||M^{-1}|| in the
    1-norm, evaluated densely at small n.  The inverse-equivalence of a
    product chain rests on this ratio being modest; it is reported here,
    not checked at solve time."""
    n = h.n
    if n > max_n:
        raise ValueError(f"handle diagnostics capped at n={max_n}")
    eye = np.eye(n)
    prod_norm = 1.0
    for step in h.steps:
        Fi = np.column_stack([step.solve(eye[:, j]) for j in range(n)])
        prod_norm *= np.abs(Fi).sum(axis=0).max()
    Minv = invert_via_handle(h, max_n=max_n)
    minv_norm = np.abs(Minv).sum(axis=0).max()
    ratio = prod_norm / (abs(h.alpha) * minv_norm) if minv_norm else np.inf
    return {"factor_inv_norm_product": prod_norm,
            "minv_norm1": minv_norm,
            "chain_ratio": ratio}
