"""
Non-negative LASSO by cyclic coordinate descent,

    min_c ||t - X c||^2 + lam ||c||_1   subject to c >= 0,

warm-started along a decreasing lambda grid. The inner loop works on the
Gram matrix and is compiled with numba.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numba
import numpy as np

from ..errors import ContractViolation
from .path import PathPoint, SolutionPath, residual_ss

TOL = 1e-8
MAX_SWEEPS = 10_000


@numba.njit(cache=True)
def _cd_gram(G, b, lam, c, tol, max_sweeps):
    """Coordinate descent on the Gram form; updates c in place.

    Returns the number of sweeps performed (max_sweeps + 1 if not converged).
    """
    p = c.shape[0]
    q = G @ c
    half = 0.5 * lam
    for sweep in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            old = c[j]
            rho = b[j] - q[j] + gjj * old
            new = (rho - half) / gjj
            if new < 0.0:
                new = 0.0
            diff = new - old
            if diff != 0.0:
                for k in range(p):
                    q[k] += G[k, j] * diff
                c[j] = new
                if abs(diff) > delta:
                    delta = abs(diff)
        if delta < tol:
            return sweep + 1
    return max_sweeps + 1


def lambda_max(design: np.ndarray, target: np.ndarray) -> float:
    """Smallest penalty for which c = 0 is optimal: 2 max_j x_j^T t."""
    return float(max(2.0 * np.max(design.T @ target), 0.0)) if design.shape[1] else 0.0


def auto_grid(lam_max: float, n: int = 100, ratio: float = 1e-4) -> np.ndarray:
    if lam_max <= 0.0:
        return np.zeros(0)
    return np.geomspace(lam_max, ratio * lam_max, n)


def objective(design, target, c, lam) -> float:
    return residual_ss(design, target, c) + lam * float(np.sum(c))


def kkt_violation(design, target, c, lam) -> float:
    """Largest violation of the non-negative LASSO optimality conditions."""
    g = 2.0 * design.T @ (target - design @ c)
    active = c > 0.0
    viol = np.zeros_like(g)
    viol[active] = np.abs(g[active] - lam)
    viol[~active] = np.maximum(g[~active] - lam, 0.0)
    return float(viol.max()) if viol.size else 0.0


def _polish(G, b, design, target, c, lam):
    """Solve the stationarity equations on the current support exactly,
    dropping entries that come out non-positive.

    Accepted only when the objective (up to rounding) and the KKT violation
    do not get worse.
    """
    A = np.flatnonzero(c > 0.0)
    cA = None
    while A.size:
        try:
            cA = np.linalg.solve(G[np.ix_(A, A)], b[A] - 0.5 * lam)
        except np.linalg.LinAlgError:
            return c
        if not np.all(np.isfinite(cA)):
            return c
        if np.all(cA > 0.0):
            break
        A = A[cA > 0.0]
        cA = None
    if cA is None:
        return c
    trial = np.zeros_like(c)
    trial[A] = cA
    before = objective(design, target, c, lam)
    # Objectives agree to rounding at this point; compare with a relative slack.
    if objective(design, target, trial, lam) <= before + 1e-12 * abs(before) and \
            kkt_violation(design, target, trial, lam) <= kkt_violation(design, target, c, lam):
        return trial
    return c


def lasso_solve(design, target, lam, c0=None, tol=TOL, max_sweeps=MAX_SWEEPS, gram=None):
    """Single-lambda solve. Returns (c, n_sweeps, converged)."""
    design = np.asarray(design, dtype=float)
    G, b = gram if gram is not None else (design.T @ design, design.T @ target)
    c = np.zeros(design.shape[1]) if c0 is None else np.array(c0, dtype=float)
    sweeps = _cd_gram(G, b, float(lam), c, tol, max_sweeps)
    converged = sweeps <= max_sweeps
    c = _polish(G, b, design, target, c, lam)
    return c, sweeps, converged


def lasso_path(
    system,
    lambdas: Optional[Sequence[float]] = None,
    n_lambdas: int = 100,
    ratio: float = 1e-4,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> SolutionPath:
    """Warm-started non-negative LASSO path.

    ``system`` is a RegressionSystem (or anything with ``design`` and
    ``target``). With ``lambdas=None`` a log grid from lambda_max down to
    ``ratio * lambda_max`` is used.
    """
    X, t = system.design, system.target
    if lambdas is None:
        lambdas = auto_grid(lambda_max(X, t), n_lambdas, ratio)
        if lambdas.size == 0:
            c = np.zeros(X.shape[1])
            return SolutionPath([PathPoint([], c, 0.0, residual_ss(X, t, c))], "LASSO", "zero target")
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0.0) or np.any(np.diff(lambdas) >= 0.0):
        raise ContractViolation("lambda grid must be positive and strictly decreasing")
    G, b = X.T @ X, X.T @ t
    c = np.zeros(X.shape[1])
    points, warnings = [], []
    for lam in lambdas:
        c, sweeps, ok = lasso_solve(X, t, lam, c, tol, max_sweeps, (G, b))
        note = "" if ok else f"not converged after {max_sweeps} sweeps"
        if note:
            warnings.append(f"lambda={lam:.6g}: {note}")
        active = [int(j) for j in np.flatnonzero(c > 0.0)]
        points.append(PathPoint(active, c.copy(), float(lam), residual_ss(X, t, c), note))
    return SolutionPath(points, "LASSO", "grid exhausted", warnings)
