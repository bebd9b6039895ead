"""Weighted L1-regularized logistic regression via proximal gradient.

Minimizes  F(w, w0) = sum_n  omega_n * log(1 + exp(-ytil_n (w.x_n + w0)))
                      + lambda * ||w||_1
with the bias unpenalized. Proximal gradient with backtracking line search:
the objective sequence is monotonically nonincreasing by construction, which
is what the tree trainer's accept test leans on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError


@dataclass
class WeightedBinaryProblem:
    """Points (x_n, ytil_n in {-1,+1}, omega_n > 0) plus L1 strength."""

    X: np.ndarray
    y: np.ndarray       # +-1
    omega: np.ndarray   # positive weights
    lam: float = 0.0

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        n = self.X.shape[0]
        if n < 1:
            raise DataError("problem needs at least one point")
        if self.y.shape != (n,) or self.omega.shape != (n,):
            raise DataError("X, y, omega length mismatch")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise DataError("pseudo-labels must be +-1")
        if not np.all(np.isfinite(self.omega) & (self.omega > 0)):
            raise DataError("weights must be finite and positive")
        if self.lam < 0:
            raise DataError("lambda must be >= 0")

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass
class LinearModel:
    w: np.ndarray
    w0: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.w0 = float(self.w0)


@dataclass
class SolverConfig:
    max_iter: int = 1000
    tol: float = 1e-8          # relative objective decrease
    init_step: float = 1.0
    step_shrink: float = 0.5
    step_grow: float = 1.25
    min_step: float = 1e-18

    def __post_init__(self):
        if self.max_iter < 1:
            raise DataError("max_iter must be >= 1")
        if self.tol <= 0:
            raise DataError("tol must be > 0")


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*||.||_1: sign(v) * max(|v| - t, 0) elementwise."""
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def smooth_loss(problem: WeightedBinaryProblem, model: LinearModel) -> float:
    """Weighted logistic loss, the differentiable part of the objective."""
    margins = problem.y * (problem.X @ model.w + model.w0)
    return float(np.sum(problem.omega * np.logaddexp(0.0, -margins)))


def smooth_gradient(problem: WeightedBinaryProblem, model: LinearModel):
    """(grad_w, grad_w0) of smooth_loss."""
    margins = problem.y * (problem.X @ model.w + model.w0)
    # sigma(-m) = exp(-log(1 + e^m)), overflow-free for any m
    sig = np.exp(-np.logaddexp(0.0, margins))
    coeff = -problem.omega * problem.y * sig
    return problem.X.T @ coeff, float(np.sum(coeff))


def objective(problem: WeightedBinaryProblem, model: LinearModel) -> float:
    return smooth_loss(problem, model) + problem.lam * float(np.sum(np.abs(model.w)))


def solve(problem: WeightedBinaryProblem, init: LinearModel | None = None,
          cfg: SolverConfig | None = None) -> LinearModel:
    """Proximal-gradient descent with backtracking, warm-started at init.

    Deterministic; F(result) <= F(init); stops on relative objective
    decrease < cfg.tol or after cfg.max_iter iterations.
    """
    cfg = cfg or SolverConfig()
    if init is None:
        init = LinearModel(np.zeros(problem.dim), 0.0)
    w = np.asarray(init.w, dtype=float).copy()
    if w.shape != (problem.dim,):
        raise DataError(f"init has {w.shape} weights, problem wants ({problem.dim},)")
    w0 = float(init.w0)

    cur = LinearModel(w, w0)
    f_cur = smooth_loss(problem, cur)
    F_cur = f_cur + problem.lam * float(np.sum(np.abs(w)))
    if not np.isfinite(F_cur):
        raise NumericError("non-finite objective at init: rescale the problem")
    step = cfg.init_step

    for _ in range(cfg.max_iter):
        gw, gw0 = smooth_gradient(problem, cur)
        if not (np.all(np.isfinite(gw)) and np.isfinite(gw0)):
            raise NumericError("non-finite gradient: rescale the problem")
        accepted = False
        while step >= cfg.min_step:
            w_new = soft_threshold(cur.w - step * gw, step * problem.lam)
            w0_new = cur.w0 - step * gw0
            cand = LinearModel(w_new, w0_new)
            f_new = smooth_loss(problem, cand)
            dw = w_new - cur.w
            dw0 = w0_new - cur.w0
            quad = f_cur + float(gw @ dw) + gw0 * dw0 \
                + (float(dw @ dw) + dw0 * dw0) / (2.0 * step)
            if np.isfinite(f_new) and f_new <= quad:
                accepted = True
                break
            step *= cfg.step_shrink
        if not accepted:
            break
        F_new = f_new + problem.lam * float(np.sum(np.abs(w_new)))
        if F_new > F_cur:
            # sufficient-decrease passed but rounding nudged F up: stop, keep cur
            break
        rel_drop = (F_cur - F_new) / max(abs(F_cur), 1.0)
        cur, f_cur, F_cur = cand, f_new, F_new
        if rel_drop < cfg.tol:
            break
        step *= cfg.step_grow
    return cur


def weighted_01_loss(model: LinearModel, problem: WeightedBinaryProblem) -> float:
    """Total weight of sign-rule misclassifications; score 0 counts as +1
    (same tie rule as tree routing, where 0 goes right)."""
    scores = problem.X @ model.w + model.w0
    pred = np.where(scores < 0, -1.0, 1.0)
    return float(np.sum(problem.omega[pred != problem.y]))
