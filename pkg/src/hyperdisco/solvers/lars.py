"""
Non-negative least angle regression with the LASSO modification.

Only positive correlations may enter. Along the equiangular direction an
active coefficient that reaches zero is dropped before the step would make
it negative. Every breakpoint becomes a PathPoint; the starting point c = 0
is included as step 0.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .path import PathPoint, SolutionPath, residual_ss

JITTER = 1e-12
# Active Gram matrices with a Cholesky diagonal ratio below this are
# treated as singular.
SINGULAR_RATIO = 1e-8
DEFAULT_MAX_ITER = 500


def _equiangular(G_A: np.ndarray):
    """Solve G_A d = 1. Returns d, or None if G_A is numerically singular."""
    ones = np.ones(G_A.shape[0])
    for jitter in (0.0, JITTER * max(1.0, float(np.max(np.diag(G_A))))):
        try:
            factor = cho_factor(G_A + jitter * np.eye(G_A.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            continue
        diag = np.abs(np.diag(factor[0]))
        if diag.min() < SINGULAR_RATIO * diag.max():
            return None
        return cho_solve(factor, ones)
    return None


def lars_path(system, max_steps: Optional[int] = None, tol: float = 1e-12) -> SolutionPath:
    """Positive LARS-LASSO path on a standardized system.

    ``max_steps`` caps the number of breakpoints; drops count as steps, so
    the cap may exceed the number of columns. ``tol`` is the correlation
    level, relative to the initial maximum, at which the path ends.
    """
    X, t = system.design, system.target
    n, p = X.shape
    if max_steps is None:
        max_steps = DEFAULT_MAX_ITER
    c = np.zeros(p)
    points = [PathPoint([], c.copy(), 0, residual_ss(X, t, c))]
    corr = X.T @ t
    C0 = float(np.max(corr)) if p else 0.0
    if p == 0 or C0 <= 0.0:
        return SolutionPath(points, "LARS", "no positive correlation")
    floor = tol * C0
    active: List[int] = [int(np.argmax(corr))]
    reason = "path exhausted"
    step = 0
    last_dropped = -1
    while step < max_steps:
        A = np.array(active)
        G_A = X[:, A].T @ X[:, A]
        d = _equiangular(G_A)
        if d is None or d.sum() <= 0.0:
            reason = "active Gram matrix numerically singular; path truncated"
            break
        A_norm = 1.0 / np.sqrt(d.sum())
        w = A_norm * d
        u = X[:, A] @ w
        a = X.T @ u
        r = t - X @ c
        corr = X.T @ r
        C = float(np.mean(corr[A]))
        if C <= floor:
            reason = "correlations exhausted"
            break

        # Step to the next entering variable (positive correlations only).
        gamma_in, j_in = C / A_norm, -1
        inactive = np.setdiff1d(np.arange(p), A)
        for j in inactive:
            denom = A_norm - a[j]
            if j == last_dropped or denom <= 0.0:
                continue
            g = max((C - corr[j]) / denom, 0.0)
            if g < gamma_in:
                gamma_in, j_in = g, int(j)

        # Step at which an active coefficient would cross zero.
        gamma_out, k_out = np.inf, -1
        cA = c[A]
        for pos in range(len(A)):
            if w[pos] < 0.0:
                g = -cA[pos] / w[pos]
                if 0.0 <= g < gamma_out:
                    gamma_out, k_out = g, pos

        step += 1
        if gamma_out < gamma_in:
            c[A] = cA + gamma_out * w
            dropped = int(A[k_out])
            c[dropped] = 0.0
            active.remove(dropped)
            last_dropped = dropped
            note = f"drop {dropped}"
        else:
            c[A] = np.maximum(cA + gamma_in * w, 0.0)
            last_dropped = -1
            if j_in >= 0:
                active.append(j_in)
                note = f"add {j_in}"
            else:
                note = "least-squares end point"
        points.append(PathPoint(list(active), c.copy(), step, residual_ss(X, t, c), note))
        if j_in < 0 and gamma_out >= gamma_in:
            reason = "reached the least-squares solution on the active set"
            break
        if not active:
            reason = "active set emptied"
            break
    else:
        reason = f"max_steps={max_steps} reached"
    return SolutionPath(points, "LARS", reason)
