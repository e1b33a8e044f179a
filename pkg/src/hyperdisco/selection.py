"""
Model selection along a solution path: AIC, BIC and K-fold cross
validation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .data import make_rng
from .errors import ConfigurationError, ContractViolation, DegenerateError
from .solvers import solve_path
from .solvers.path import SolutionPath

RSS_FLOOR = 1e-300
CRITERIA = ("AIC", "BIC", "CV")


def _log_rss(rss: float, n_obs: int):
    if n_obs < 1:
        raise ContractViolation("n_obs must be positive")
    if rss < 0.0:
        raise ContractViolation("rss must be non-negative")
    clamped = rss < RSS_FLOOR
    return n_obs * math.log(max(rss, RSS_FLOOR) / n_obs), clamped


def aic(rss: float, n_obs: int, n_active: int) -> float:
    """n ln(RSS/n) + 2k. A zero RSS is clamped to 1e-300.

    >>> aic(60.0, 60, 2)
    4.0
    """
    fit, _ = _log_rss(rss, n_obs)
    return fit + 2.0 * n_active


def bic(rss: float, n_obs: int, n_active: int) -> float:
    """n ln(RSS/n) + k ln n."""
    fit, _ = _log_rss(rss, n_obs)
    return fit + n_active * math.log(n_obs)


@dataclass
class CVResult:
    knobs: np.ndarray
    mean_error: np.ndarray
    std_err: np.ndarray
    fold_errors: np.ndarray
    K: int
    seed: int


@dataclass
class SelectionResult:
    criterion: str
    scores: np.ndarray
    chosen_index: int
    n_active: List[int]
    knobs: np.ndarray
    cv_std_err: Optional[np.ndarray] = None
    rss_clamped: bool = False
    notes: List[str] = field(default_factory=list)

    def to_rows(self):
        se = self.cv_std_err if self.cv_std_err is not None else [None] * len(self.scores)
        return [
            {"index": i, "knob": float(k), "n_active": n, "score": float(s),
             "std_err": None if e is None else float(e), "chosen": i == self.chosen_index}
            for i, (k, n, s, e) in enumerate(zip(self.knobs, self.n_active, self.scores, se))
        ]

    def write_csv(self, path) -> None:
        rows = self.to_rows()
        with Path(path).open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["index", "knob", "n_active", "score", "std_err", "chosen"])
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if v is None else v) for k, v in row.items()})


def choose(scores, n_active) -> int:
    """Index of the minimum score; ties go to the smaller active set, then
    the smaller index."""
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ContractViolation("cannot select from an empty path")
    finite = np.where(np.isfinite(scores), scores, np.inf)
    best = finite.min()
    ties = [i for i in range(len(finite)) if finite[i] == best]
    return min(ties, key=lambda i: (n_active[i], i))


def fold_indices(n_obs: int, K: int, seed: int, groups=None) -> List[np.ndarray]:
    """Shuffle rows with a seeded Philox stream and split into K near-equal
    folds. With ``groups`` each group is shuffled and dealt separately so
    every fold keeps the group proportions."""
    if K < 2:
        raise ConfigurationError("K must be at least 2")
    if n_obs < K:
        raise ContractViolation(f"{n_obs} observations cannot form {K} folds")
    if seed is None:
        raise ConfigurationError("cross validation requires an explicit seed")
    rng = make_rng(seed)
    if groups is None:
        perm = rng.permutation(n_obs)
        return [np.sort(f) for f in np.array_split(perm, K)]
    groups = np.asarray(groups)
    folds: List[list] = [[] for _ in range(K)]
    offset = 0
    for g in np.unique(groups):
        rows = rng.permutation(np.flatnonzero(groups == g))
        for pos, row in enumerate(rows):
            folds[(offset + pos) % K].append(row)
        offset += rows.size
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def _fold_path(train, algorithm: str, knobs, n_full: int, options: dict) -> SolutionPath:
    if algorithm == "LASSO":
        opts = {k: v for k, v in options.items() if k not in ("lambdas", "n_lambdas", "ratio")}
        lambdas = np.asarray(knobs, dtype=float) * train.n_obs / n_full
        return solve_path(train, "LASSO", lambdas=lambdas, **opts)
    return solve_path(train, algorithm, **options)


def _validation_error(train, full, val_rows, c_scaled) -> float:
    X_val = train.standardized_rows(full.raw_design[val_rows])
    pred = X_val @ c_scaled + train.target_mean
    r = full.raw_target[val_rows] - pred
    return float(r @ r) / len(val_rows)


def kfold_cv(system, algorithm: str, path: SolutionPath, K: int = 5, seed: Optional[int] = None,
             stratify: bool = False, options: Optional[dict] = None) -> CVResult:
    """K-fold validation error at each knob of the full-data ``path``.

    LASSO folds are solved on the full-data lambda grid rescaled by
    n_train / n (the penalty competes with a sum of squares). LARS and OMP
    folds are compared step by step; a fold path shorter than the full one
    is padded with its last point. Columns that lose all variance on a
    fold's training rows are excluded for that fold only.
    """
    algorithm = algorithm.upper()
    options = dict(options or {})
    knobs = path.knobs
    folds = fold_indices(system.n_obs, K, seed, system.row_block if stratify else None)
    errors = np.full((K, len(path)), np.inf)
    for i, val in enumerate(folds):
        train_rows = np.setdiff1d(np.arange(system.n_obs), val)
        try:
            train = system.subset(train_rows)
        except DegenerateError:
            continue
        fold_path = _fold_path(train, algorithm, knobs, system.n_obs, options)
        for t in range(len(path)):
            if algorithm == "LASSO":
                point = fold_path.points[t]
            else:
                point = fold_path.point_at(t)
            errors[i, t] = _validation_error(train, system, val, point.c_scaled)
    mean = errors.mean(axis=0)
    std_err = errors.std(axis=0, ddof=1) / np.sqrt(K) if K > 1 else np.zeros(len(path))
    return CVResult(knobs, mean, std_err, errors, K, seed)


def select(path: SolutionPath, criterion: str, n_obs: Optional[int] = None,
           cv: Optional[CVResult] = None) -> SelectionResult:
    """Pick the path point minimizing the criterion."""
    if len(path) == 0:
        raise ContractViolation("empty solution path")
    criterion = criterion.upper()
    n_active = [p.n_active for p in path.points]
    if criterion in ("AIC", "BIC"):
        if n_obs is None:
            raise ContractViolation("n_obs is required for information criteria")
        fn = aic if criterion == "AIC" else bic
        scores = np.array([fn(p.rss, n_obs, k) for p, k in zip(path.points, n_active)])
        clamped = any(p.rss < RSS_FLOOR for p in path.points)
        idx = choose(scores, n_active)
        return SelectionResult(criterion, scores, idx, n_active, path.knobs, None, clamped)
    if criterion == "CV":
        if cv is None:
            raise ContractViolation("CV selection needs a CVResult")
        idx = choose(cv.mean_error, n_active)
        return SelectionResult("CV", cv.mean_error, idx, n_active, path.knobs, cv.std_err)
    raise ConfigurationError(f"unknown selection criterion {criterion!r}")


def run_selection(system, algorithm: str, path: SolutionPath, criterion: str, K: int = 5,
                  seed: Optional[int] = None, stratify: bool = False,
                  options: Optional[dict] = None) -> SelectionResult:
    """Convenience wrapper: computes CV when needed, then selects."""
    criterion = criterion.upper()
    cv = None
    if criterion == "CV":
        cv = kfold_cv(system, algorithm, path, K, seed, stratify, options)
    return select(path, criterion, system.n_obs, cv)
