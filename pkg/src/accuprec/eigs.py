"""Smallest-eigenvalue computation through accurate inverses.

Power iteration (inverse iteration) or Lanczos with full reorthogonalization
on H = A^{-1}, where each product H v is one inverse-equivalent solve of
A u = v.  The converged largest eigenvalue theta of H gives the eigenvalue
of A of smallest absolute value as 1/theta, with accuracy independent of
kappa(A) when the solves are inverse-equivalent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from .core import as_vector

__all__ = ["EigReport", "inverse_iteration", "lanczos_smallest"]

_EPS = float(np.finfo(np.float64).eps)


@dataclass
class EigReport:
    theta: float                 # converged eigenvalue of H = A^{-1}
    lam: float                   # 1/theta: eigenvalue of A
    iterations: int
    residual: float              # ||H x - theta x||_2 / |theta|
    x: np.ndarray                # unit-2-norm eigenvector estimate
    converged: bool
    info: dict = field(default_factory=dict)


def inverse_iteration(applyH: Callable[[np.ndarray], np.ndarray],
                      v0: np.ndarray, tol: float, maxit: int = 100,
                      stagnation_window: int = 4) -> EigReport:
    """Power iteration on H = A^{-1}; targets the eigenvalue of A of
    smallest absolute value.

    The estimate is the Rayleigh quotient theta = x^T (H x) at unit x (valid
    for nonsymmetric H as the iterates align with the dominant right
    eigenvector); stops when ||H x - theta x|| <= tol*|theta|.  A residual
    that stops improving for `stagnation_window` consecutive iterations ends
    the iteration flagged unconverged (inaccurate applyH floors there).
    """
    x = as_vector(v0).copy()
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ValueError("v0 must be nonzero")
    x /= nx
    theta = 0.0
    res = math.inf
    best_res = math.inf
    flat = 0
    status = "maxit"
    it = 0
    history: List[float] = []
    for it in range(1, maxit + 1):
        y = applyH(x)
        theta = float(x @ y)
        if theta == 0.0:
            status = "degenerate"
            break
        res = float(np.linalg.norm(y - theta * x)) / abs(theta)
        history.append(res)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            status = "degenerate"
            break
        x = y / ny
        if res <= tol:
            status = "converged"
            break
        if res >= 0.9 * best_res:
            flat += 1
            if flat >= stagnation_window:
                status = "stagnated"
                break
        else:
            flat = 0
        best_res = min(best_res, res)
    converged = status == "converged"
    lam = 1.0 / theta if theta != 0.0 else math.inf
    return EigReport(theta=theta, lam=lam, iterations=it, residual=res,
                     x=x, converged=converged,
                     info={"status": status, "residual_history": history})


def lanczos_smallest(applyH: Callable[[np.ndarray], np.ndarray],
                     v0: np.ndarray, k: int, tol: float, maxit: int = 200,
                     seed: int = 0) -> List[EigReport]:
    """Lanczos with full reorthogonalization on symmetric H = A^{-1}.

    Returns the k largest-|theta| Ritz pairs of H converted to the k
    smallest-|lambda| eigenvalues of A, each with the same residual-based
    stopping rule |beta * s_last| <= tol*|theta|.  Breakdown restarts the
    basis with a seeded random vector (flagged in info).
    """
    x = as_vector(v0).copy()
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ValueError("v0 must be nonzero")
    n = len(x)
    rng = np.random.default_rng(seed)
    V: List[np.ndarray] = [x / nx]
    alphas: List[float] = []
    betas: List[float] = []
    restarts = 0
    it = 0
    theta = np.zeros(0)
    S = np.zeros((0, 0))
    bound = np.zeros(0)

    while it < maxit:
        it += 1
        v = V[-1]
        y = applyH(v)
        a = float(v @ y)
        alphas.append(a)
        y = y - a * v
        if len(V) > 1:
            y = y - betas[-1] * V[-2]
        # full reorthogonalization, twice
        for _ in range(2):
            for q in V:
                y -= (q @ y) * q
        b = float(np.linalg.norm(y))
        m = len(alphas)
        T = np.diag(alphas)
        if m > 1:
            T += np.diag(betas[-(m - 1):], 1) + np.diag(betas[-(m - 1):], -1)
        theta, S = np.linalg.eigh(T)
        order = np.argsort(-np.abs(theta))[:min(k, m)]
        bound = np.abs(b * S[-1, order])
        if len(order) >= k and np.all(bound <= tol * np.abs(theta[order])):
            betas.append(b)
            break
        if b <= _EPS * max(1.0, abs(a)):
            # invariant subspace found; restart a fresh block with a random
            # direction (junction coupling is exactly zero)
            restarts += 1
            y = rng.standard_normal(n)
            for _ in range(2):
                for q in V:
                    y -= (q @ y) * q
            b = float(np.linalg.norm(y))
            betas.append(0.0)
            if b == 0.0 or m >= n:
                break
            V.append(y / b)
            continue
        betas.append(b)
        if m >= n:
            break
        V.append(y / b)

    order = np.argsort(-np.abs(theta))[:min(k, len(theta))]
    reports = []
    for idx in order:
        th = float(theta[idx])
        xvec = np.zeros(n)
        for j, q in enumerate(V[:S.shape[0]]):
            xvec += S[j, idx] * q
        nxv = np.linalg.norm(xvec)
        if nxv > 0:
            xvec /= nxv
        resid = float(np.abs(betas[-1] * S[-1, idx])) / abs(th) if th else math.inf
        reports.append(EigReport(
            theta=th, lam=1.0 / th if th else math.inf,
            iterations=it, residual=resid, x=xvec,
            converged=resid <= tol,
            info={"status": "converged" if resid <= tol else "maxit",
                  "restarts": restarts}))
    return reports
