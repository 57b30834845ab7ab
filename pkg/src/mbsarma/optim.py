"""Minimal BFGS with a backtracking Armijo line search."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class BfgsResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    n_eval: int
    converged: bool
    message: str
    hess_inv: np.ndarray


def bfgs_minimize(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    gtol: float = 1e-8,
    max_iter: int = 200,
    c1: float = 1e-4,
    shrink: float = 0.5,
    max_backtracks: int = 60,
    hess_inv0: np.ndarray | None = None,
) -> BfgsResult:
    """Minimise a smooth function given a callable returning ``(f, grad)``.

    Non-finite function values count as Armijo failures, so the search
    backtracks out of infeasible regions. The inverse Hessian starts at
    ``hess_inv0`` (identity by default), is rescaled by ``y's / y'y`` before
    the first update, skips updates without positive curvature and is reset
    to the identity when the search direction is not a descent direction.
    A failed line search ends the run with ``converged=False`` and the last
    accepted iterate.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    n_eval = 1
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    I = np.eye(x.size)
    H = I.copy() if hess_inv0 is None else np.array(hess_inv0, dtype=float)
    fresh = hess_inv0 is None

    for it in range(max_iter):
        if np.max(np.abs(g)) < gtol:
            return BfgsResult(x, f, g, it, n_eval, True, "gradient tolerance reached", H)
        p = -H @ g
        slope = g @ p
        if not slope < 0:
            H, fresh = I.copy(), True
            p, slope = -g, -(g @ g)
        # unit step, except a unit-norm cap while H is still the raw identity
        step = min(1.0, 1.0 / np.max(np.abs(p))) if fresh else 1.0
        for _ in range(max_backtracks):
            x_new = x + step * p
            f_new, g_new = fun_grad(x_new)
            n_eval += 1
            if np.isfinite(f_new) and f_new <= f + c1 * step * slope:
                break
            step *= shrink
        else:
            return BfgsResult(x, f, g, it, n_eval, False, "line search failed", H)

        s, y = x_new - x, g_new - g
        if not np.any(s):
            return BfgsResult(x, f, g, it + 1, n_eval, False, "step underflow", H)
        x, f, g = x_new, f_new, g_new
        sy = s @ y
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            if fresh:
                H = (sy / (y @ y)) * I
                fresh = False
            rho = 1.0 / sy
            Hy = H @ y
            H = H + ((sy + y @ Hy) * rho**2) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))

    converged = bool(np.max(np.abs(g)) < gtol)
    return BfgsResult(x, f, g, max_iter, n_eval, converged,
                      "gradient tolerance reached" if converged else "iteration limit", H)
