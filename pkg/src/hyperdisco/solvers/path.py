"""Containers shared by the sparse solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class PathPoint:
    """One candidate solution.

    ``knob`` is the penalty weight for LASSO and the step index for LARS and
    OMP. ``c_scaled`` lives in the standardized column space of the system.
    """

    active_set: List[int]
    c_scaled: np.ndarray
    knob: float
    rss: float
    note: str = ""

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.c_scaled > 0.0))

    @property
    def support(self) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.c_scaled > 0.0)]

    @property
    def l1(self) -> float:
        return float(np.sum(self.c_scaled))


@dataclass
class SolutionPath:
    points: List[PathPoint]
    algorithm: str
    reason: str = ""
    warnings: List[str] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i) -> PathPoint:
        return self.points[i]

    @property
    def knobs(self) -> np.ndarray:
        return np.array([p.knob for p in self.points], dtype=float)

    def activation_grid(self, n_cols: int) -> np.ndarray:
        """Boolean (n_cols, n_points) grid: term j active at point t."""
        grid = np.zeros((n_cols, len(self.points)), dtype=bool)
        for t, p in enumerate(self.points):
            grid[:, t] = p.c_scaled > 0.0
        return grid

    def point_at(self, knob_index: int) -> Optional[PathPoint]:
        """Point for step-indexed paths, clamped to the last point."""
        if not self.points:
            return None
        return self.points[min(knob_index, len(self.points) - 1)]


def residual_ss(design: np.ndarray, target: np.ndarray, c: np.ndarray) -> float:
    r = target - design @ c
    return float(r @ r)
