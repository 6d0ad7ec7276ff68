"""Consensus ADMM for ``min ||X||_{2,1} + lam ||X - W||_{2,1}  s.t.  AX = Y``.

Each term keeps a local copy of X and a scaled dual; the copies are pulled
to their average every iteration. All three blocks have exact, cheap
proximal maps (two row shrinkages and an affine projection).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


class RankDeficientError(np.linalg.LinAlgError):
    """``A A^T`` is numerically singular; the affine projection is undefined."""


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.5
    penalty: float = 6.0
    max_iters: int = 50_000
    primal_tol: float = 1e-9
    dual_tol: float = 1e-9

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if not (self.primal_tol > 0 and self.dual_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolveResult:
    x_hat: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    objective: float
    # -penalty * (u1 + u2): a subgradient of the objective lying in range(A^T)
    subgradient: np.ndarray = field(repr=False, default=None)
    history: list = field(repr=False, default_factory=list)


def l21_norm(x):
    return float(np.sqrt(np.einsum("ij,ij->i", x, x)).sum())


def prior_objective(x, w, lam):
    """``||x||_{2,1} + lam * ||x - w||_{2,1}``."""
    value = l21_norm(x)
    if lam:
        value += lam * l21_norm(x - w)
    return value


def prox_row_shrink(v, theta):
    """Row-wise shrinkage: prox of ``theta * ||.||_{2,1}``."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    v = np.asarray(v, dtype=float)
    norms = np.sqrt(np.einsum("ij,ij->i", v, v))
    scale = np.zeros_like(norms)
    keep = norms > theta
    scale[keep] = 1.0 - theta / norms[keep]
    return v * scale[:, None]


def prox_shifted_row_shrink(v, w, theta):
    """Prox of ``theta * ||. - w||_{2,1}``."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {w.shape}")
    return w + prox_row_shrink(v - w, theta)


class GramFactor:
    """Cholesky factor of ``A A^T``, reusable across iterations and right-hand sides."""

    def __init__(self, a, rcond=1e-12):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] > a.shape[1]:
            raise ValueError(f"need an m x n matrix with m <= n, got {a.shape}")
        self.a = a
        try:
            self.cho = linalg.cho_factor(a @ a.T, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise RankDeficientError("A A^T is not positive definite") from exc
        diag = np.abs(np.diag(self.cho[0]))
        if diag.min() <= math.sqrt(rcond) * diag.max():
            raise RankDeficientError("A A^T is numerically rank deficient")

    def solve(self, r):
        return linalg.cho_solve(self.cho, r, check_finite=False)


def affine_project(x, a, y, factor=None):
    """Euclidean projection of ``x`` onto ``{X : a X = y}``."""
    if factor is None:
        factor = GramFactor(a)
    a = factor.a
    y = np.asarray(y, dtype=float)
    if a.shape[1] != x.shape[0] or a.shape[0] != y.shape[0] or x.shape[1] != y.shape[1]:
        raise ValueError("inconsistent dimensions for affine projection")
    return x - a.T @ factor.solve(a @ x - y)


def solve_ml1p(a, y, w, cfg=SolverConfig(), factor=None, record_history=False):
    """Minimize ``||X||_{2,1} + cfg.lam ||X - W||_{2,1}`` subject to ``a X = y``.

    Stops when the largest local-copy disagreement and the scaled change of
    the consensus point, both relative to ``max(1, ||Z||_F)``, fall under
    the tolerances. Non-convergence is reported, never raised. The returned
    ``x_hat`` is the final consensus point projected onto the feasible set.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    m, n = a.shape
    if y.shape[0] != m:
        raise ValueError(f"y has {y.shape[0]} rows, A has {m}")
    w = np.zeros((n, y.shape[1])) if w is None else np.asarray(w, dtype=float)
    if w.shape != (n, y.shape[1]):
        raise ValueError(f"w must be {(n, y.shape[1])}, got {w.shape}")
    if factor is None:
        factor = GramFactor(a)

    rho = cfg.penalty
    lam = cfg.lam
    use_prior = lam > 0
    blocks = 3 if use_prior else 2
    dual_scale = rho * math.sqrt(blocks)

    def project(x):
        return x - a.T @ factor.solve(a @ x - y)

    z = project(np.zeros_like(w))
    u1 = np.zeros_like(z)
    u2 = np.zeros_like(z)
    u3 = np.zeros_like(z)
    history = []
    r_pri = r_dual = math.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        x1 = prox_row_shrink(z - u1, 1.0 / rho)
        x3 = project(z - u3)
        z_old = z
        if use_prior:
            x2 = prox_shifted_row_shrink(z - u2, w, lam / rho)
            z = (x1 + x2 + x3 + u1 + u2 + u3) / blocks
            u2 += x2 - z
        else:
            z = (x1 + x3 + u1 + u3) / blocks
        u1 += x1 - z
        u3 += x3 - z

        scale = max(1.0, math.sqrt(np.einsum("ij,ij->", z, z)))
        gap = max(np.linalg.norm(x1 - z), np.linalg.norm(x3 - z))
        if use_prior:
            gap = max(gap, np.linalg.norm(x2 - z))
        r_pri = gap / scale
        r_dual = dual_scale * np.linalg.norm(z - z_old) / scale
        if record_history:
            history.append(prior_objective(project(z), w, lam))
        if r_pri <= cfg.primal_tol and r_dual <= cfg.dual_tol:
            converged = True
            break

    x_hat = project(z)
    return SolveResult(
        x_hat=x_hat,
        iterations=it,
        primal_residual=float(r_pri),
        dual_residual=float(r_dual),
        converged=converged,
        objective=prior_objective(x_hat, w, lam),
        subgradient=-rho * (u1 + u2),
        history=history,
    )


def solve_ml1(a, y, cfg=SolverConfig(), factor=None, record_history=False):
    """Plain ``min ||X||_{2,1}  s.t.  a X = y`` (the prior block disabled)."""
    cfg = SolverConfig(0.0, cfg.penalty, cfg.max_iters, cfg.primal_tol, cfg.dual_tol)
    return solve_ml1p(a, y, None, cfg, factor=factor, record_history=record_history)
