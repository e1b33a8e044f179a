"""Non-negative least squares helpers built on scipy's Lawson-Hanson
active-set solver."""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls as _scipy_nnls


def nnls(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """argmin ||A x - b||^2 subject to x >= 0."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[1] == 0:
        return np.zeros(0)
    x, _ = _scipy_nnls(A, b, maxiter=max(50 * A.shape[1], 500))
    return x


def ridge_nnls(A: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """argmin ||A x - b||^2 + lam ||x||^2 subject to x >= 0, solved as an
    augmented NNLS problem."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if lam <= 0.0:
        return nnls(A, b)
    A_aug = np.vstack([A, np.sqrt(lam) * np.eye(n)])
    b_aug = np.concatenate([np.asarray(b, dtype=float), np.zeros(n)])
    return nnls(A_aug, b_aug)
