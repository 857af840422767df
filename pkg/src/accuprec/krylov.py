"""Restarted GMRES, CG, and MINRES over abstract operators.

Stopping follows the updated-residual estimate (relative to the right-hand
side); the true residual is recomputed at every GMRES restart and at
termination and carried in the report.  The optional residual-replacement
policy ("simple") applies to the CG/MINRES recurrences: a running deviation
bound triggers replacing the recurrence residual by rhs - op(x).  GMRES gets
the same protection from its per-cycle recomputation, so rr_policy is a
no-op there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import LinOp, aslinop, as_vector, norm2_estimate

__all__ = ["KrylovConfig", "SolveReport", "default_config",
           "gmres", "cg", "minres"]

_EPS = float(np.finfo(np.float64).eps)


@dataclass
class KrylovConfig:
    tol: float
    restart: int = 50
    maxit: int = 2000
    rr_policy: str = "off"            # "off" | "simple"
    rr_threshold: Optional[float] = None  # default sqrt(u); test hook
    op_norm_estimate: Optional[float] = None  # for the rr deviation bound

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.restart < 1:
            raise ValueError("restart must be >= 1")
        if self.rr_policy not in ("off", "simple"):
            raise ValueError(f"unknown rr_policy {self.rr_policy!r}")


def default_config(n: int, **overrides) -> KrylovConfig:
    """Paper-style defaults: restart 50, tolerance sqrt(n)*u."""
    cfg = dict(tol=math.sqrt(n) * _EPS, restart=50, maxit=2000)
    cfg.update(overrides)
    return KrylovConfig(**cfg)


@dataclass
class SolveReport:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_history: np.ndarray
    replacements: int = 0
    true_residual: Optional[float] = None
    info: dict = field(default_factory=dict)
    metrics: Optional[dict] = None


class _Replacer:
    """Deviation-bound bookkeeping for residual replacement.

    Dev grows by u*(||op||*||q_k|| + ||r_k||) per step; replacement fires
    once Dev >= threshold*||r_k|| and the residual has decreased since the
    last replacement point.
    """

    def __init__(self, op_norm: float, threshold: float, r0norm: float):
        self.op_norm = op_norm
        self.threshold = threshold
        self.dev = 0.0
        self.r_at_last = r0norm
        self.count = 0

    def update(self, qnorm: float, rnorm: float) -> None:
        self.dev += _EPS * (self.op_norm * qnorm + rnorm)

    def should_replace(self, rnorm: float) -> bool:
        return self.dev >= self.threshold * rnorm and rnorm < self.r_at_last

    def reset(self, rnorm: float) -> None:
        self.dev = 0.0
        self.r_at_last = rnorm
        self.count += 1


def _make_replacer(op: LinOp, cfg: KrylovConfig, r0norm: float):
    if cfg.rr_policy != "simple":
        return None
    op_norm = cfg.op_norm_estimate
    if op_norm is None:
        op_norm = norm2_estimate(op, tol=0.5, maxit=8).value
    threshold = math.sqrt(_EPS) if cfg.rr_threshold is None else cfg.rr_threshold
    return _Replacer(op_norm, threshold, r0norm)


# ---------------------------------------------------------------------------
# GMRES
# ---------------------------------------------------------------------------

def gmres(op, rhs, cfg: Optional[KrylovConfig] = None) -> SolveReport:
    """Restarted GMRES with modified Gram-Schmidt Arnoldi and Givens
    least-squares.  A subdiagonal below u*||H|| is a happy breakdown."""
    op = aslinop(op)
    b = as_vector(rhs, op.n)
    if cfg is None:
        cfg = default_config(op.n)
    bnorm = float(np.linalg.norm(b))
    history: List[float] = []
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return SolveReport(x, 0, True, np.array(history), true_residual=0.0)

    r = b.copy()
    rnorm = bnorm
    iters = 0
    converged = False
    status = "running"
    cycle_true: List[float] = []
    prev_true = None
    stagnant = 0

    while iters < cfg.maxit:
        beta = rnorm
        if beta <= cfg.tol * bnorm:
            converged = True
            status = "converged"
            break
        m = cfg.restart
        V = [r / beta]
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        hmax = 0.0
        j = -1
        happy = False
        res_est = beta
        while j + 1 < m and iters < cfg.maxit:
            j += 1
            w = op.apply(V[j])
            iters += 1
            for i in range(j + 1):
                H[i, j] = V[i] @ w
                w -= H[i, j] * V[i]
            hj1 = float(np.linalg.norm(w))
            H[j + 1, j] = hj1
            hmax = max(hmax, float(np.abs(H[: j + 2, j]).max()))
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            rho = math.hypot(H[j, j], H[j + 1, j])
            if rho == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / rho, H[j + 1, j] / rho
            H[j, j] = rho
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            res_est = abs(g[j + 1])
            history.append(res_est)
            happy = hj1 <= _EPS * hmax
            if res_est <= cfg.tol * bnorm or happy:
                break
            V.append(w / hj1)

        # correction from this cycle, then the true residual
        k = j + 1
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:k] @ y[i + 1:k]) / H[i, i]
        for i in range(k):
            x += y[i] * V[i]
        r = b - op.apply(x)
        rnorm = float(np.linalg.norm(r))
        cycle_true.append(rnorm)

        if res_est <= cfg.tol * bnorm:
            converged = True
            status = "converged"
            break
        if rnorm <= cfg.tol * bnorm:
            converged = True
            status = "converged"
            break
        if happy:
            # invariant subspace exhausted: the cycle solution is exact up
            # to rounding
            converged = True
            status = "happy_breakdown"
            break
        if prev_true is not None and rnorm >= 0.99 * prev_true:
            stagnant += 1
            if stagnant >= 2:
                status = "stagnated"
                break
        else:
            stagnant = 0
        prev_true = rnorm

    if status == "running":
        status = "maxit"
    return SolveReport(x, iters, converged, np.array(history),
                       true_residual=rnorm,
                       info={"status": status, "rhs_norm": bnorm,
                             "cycle_true_residuals": cycle_true})


# ---------------------------------------------------------------------------
# CG
# ---------------------------------------------------------------------------

def cg(op, rhs, cfg: Optional[KrylovConfig] = None) -> SolveReport:
    """Conjugate gradients for symmetric positive definite operators.

    An indefinite direction (p^T op p <= 0) stops the iteration with a
    breakdown flag; use minres for indefinite systems.
    """
    op = aslinop(op)
    b = as_vector(rhs, op.n)
    if cfg is None:
        cfg = default_config(op.n)
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    history: List[float] = []
    if bnorm == 0.0:
        return SolveReport(x, 0, True, np.array(history), true_residual=0.0)

    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    rnorm = math.sqrt(rs)
    replacer = _make_replacer(op, cfg, rnorm)
    converged = False
    status = "running"
    iters = 0

    while iters < cfg.maxit:
        if rnorm <= cfg.tol * bnorm:
            converged = True
            status = "converged"
            break
        q = op.apply(p)
        iters += 1
        pq = float(p @ q)
        if pq <= 0.0:
            status = "indefinite_breakdown"
            break
        alpha = rs / pq
        x += alpha * p
        r -= alpha * q
        rnorm = float(np.linalg.norm(r))
        if replacer is not None:
            replacer.update(abs(alpha) * float(np.linalg.norm(p)), rnorm)
            if replacer.should_replace(rnorm):
                r = b - op.apply(x)
                rnorm = float(np.linalg.norm(r))
                replacer.reset(rnorm)
        history.append(rnorm)
        rs_new = float(r @ r)
        beta = rs_new / rs
        rs = rs_new
        p = r + beta * p

    if status == "running":
        status = "maxit"
    true_res = float(np.linalg.norm(b - op.apply(x)))
    return SolveReport(x, iters, converged, np.array(history),
                       replacements=replacer.count if replacer else 0,
                       true_residual=true_res,
                       info={"status": status, "rhs_norm": bnorm})


# ---------------------------------------------------------------------------
# MINRES
# ---------------------------------------------------------------------------

def minres(op, rhs, cfg: Optional[KrylovConfig] = None) -> SolveReport:
    """MINRES (Paige-Saunders) for symmetric, possibly indefinite operators.

    Residual replacement restarts the Lanczos recurrence from the true
    residual of the current iterate.
    """
    op = aslinop(op)
    b = as_vector(rhs, op.n)
    if cfg is None:
        cfg = default_config(op.n)
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    history: List[float] = []
    if bnorm == 0.0:
        return SolveReport(x, 0, True, np.array(history), true_residual=0.0)

    replacer = _make_replacer(op, cfg, bnorm)
    converged = False
    status = "running"
    iters = 0
    restart_state = True
    rnorm = bnorm

    while iters < cfg.maxit:
        if restart_state:
            r1 = b - op.apply(x) if iters else b.copy()
            beta1 = float(np.linalg.norm(r1))
            if beta1 == 0.0:
                converged = True
                status = "converged"
                rnorm = 0.0
                break
            y = r1.copy()
            r2 = r1.copy()
            oldb = 0.0
            beta = beta1
            dbar = 0.0
            epsln = 0.0
            phibar = beta1
            cs_ = -1.0
            sn_ = 0.0
            w = np.zeros_like(b)
            w2 = np.zeros_like(b)
            rnorm = beta1
            first = True
            restart_state = False

        if rnorm <= cfg.tol * bnorm:
            converged = True
            status = "converged"
            break

        v = y / beta
        y = op.apply(v)
        iters += 1
        if not first:
            y -= (beta / oldb) * r1
        alfa = float(v @ y)
        y -= (alfa / beta) * r2
        r1 = r2
        r2 = y
        y = r2
        oldb = beta
        beta = float(np.linalg.norm(r2))
        first = False

        oldeps = epsln
        delta = cs_ * dbar + sn_ * alfa
        gbar = sn_ * dbar - cs_ * alfa
        epsln = sn_ * beta
        dbar = -cs_ * beta
        gamma = math.hypot(gbar, beta)
        gamma = max(gamma, 2.0 ** -1074)
        cs_ = gbar / gamma
        sn_ = beta / gamma
        phi = cs_ * phibar
        phibar = sn_ * phibar

        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x += phi * w
        rnorm = abs(phibar)
        history.append(rnorm)

        if replacer is not None:
            replacer.update(abs(phi) * float(np.linalg.norm(w)), rnorm)
            if replacer.should_replace(rnorm):
                replacer.reset(rnorm)
                restart_state = True
                continue
        if beta == 0.0:
            # Lanczos exhausted the Krylov space
            if rnorm <= cfg.tol * bnorm:
                converged = True
                status = "converged"
            else:
                status = "breakdown"
            break

    if status == "running":
        if rnorm <= cfg.tol * bnorm:
            converged = True
            status = "converged"
        else:
            status = "maxit"
    true_res = float(np.linalg.norm(b - op.apply(x)))
    return SolveReport(x, iters, converged, np.array(history),
                       replacements=replacer.count if replacer else 0,
                       true_residual=true_res,
                       info={"status": status, "rhs_norm": bnorm})
