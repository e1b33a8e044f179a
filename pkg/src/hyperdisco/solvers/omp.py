"""
Orthogonal matching pursuit with a non-negative refit.

At each step the inactive column with the largest positive normalized
correlation to the residual enters, then all active coefficients are refit
by NNLS. Step 0 (c = 0) is part of the path.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from .nnls import nnls
from .path import PathPoint, SolutionPath, residual_ss


def omp_path(system, max_steps: Optional[int] = None, corr_tol: float = 1e-10) -> SolutionPath:
    """Greedy forward path.

    Stops when the best positive normalized correlation falls to
    ``corr_tol`` times its initial value, after ``max_steps`` additions
    (default min(n_cols, n_obs - 1)), or when the entering column receives a
    zero NNLS coefficient.
    """
    X, t = system.design, system.target
    n, p = X.shape
    if max_steps is None:
        max_steps = min(p, n - 1)
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0.0] = np.inf
    c = np.zeros(p)
    points = [PathPoint([], c.copy(), 0, residual_ss(X, t, c))]
    active: List[int] = []
    r = t.copy()
    score0 = None
    reason = "all columns used"
    for step in range(1, max_steps + 1):
        score = (X.T @ r) / norms
        score[active] = -np.inf
        j = int(np.argmax(score))
        best = float(score[j])
        if score0 is None:
            score0 = best
        if best <= 0.0 or best <= corr_tol * score0:
            reason = "residual orthogonal to remaining columns"
            break
        trial = active + [j]
        coef = nnls(X[:, trial], t)
        if coef[-1] <= 0.0:
            reason = f"entering column {j} received a zero coefficient"
            break
        active = trial
        c = np.zeros(p)
        c[active] = coef
        r = t - X @ c
        points.append(PathPoint(list(active), c.copy(), step, float(r @ r), f"add {j}"))
    else:
        if max_steps < p:
            reason = f"max_steps={max_steps} reached"
    return SolutionPath(points, "OMP", reason)
