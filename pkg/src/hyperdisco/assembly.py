"""
Global regression system: per-mode design blocks, mode weighting, stacking,
column standardization and back-transformation to physical coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .data import Dataset
from .errors import ContractViolation, DegenerateError
from .library import BlockColumns, ModelLibrary

ZERO_VARIANCE_RTOL = 1e-12


def block_rms(data: Dataset) -> np.ndarray:
    return np.array([np.sqrt(np.mean(b.observations ** 2)) for b in data.blocks])


def mode_weights(data: Dataset) -> np.ndarray:
    """omega_k = P_rms / P_rms^(k), where P_rms is the RMS of the per-block
    RMS values. Weights are dimensionless and equal 1 for balanced blocks.

    >>> from hyperdisco.data import ModeBlock
    >>> from hyperdisco.kinematics import LoadingMode
    >>> m = LoadingMode("UT", ("P11",))
    >>> d = Dataset([ModeBlock(m, [2.0], [1.0]), ModeBlock(m, [3.0], [2.0])])
    >>> np.round(mode_weights(d), 5)
    array([1.58114, 0.79057])
    """
    if not data.blocks:
        raise ContractViolation("dataset has no blocks")
    rms = block_rms(data)
    if np.any(rms == 0.0):
        bad = [b.name for b, r in zip(data.blocks, rms) if r == 0.0]
        raise DegenerateError(f"all-zero stress in block(s) {', '.join(bad)}; weight undefined")
    total = np.sqrt(np.mean(rms ** 2))
    return total / rms


@dataclass
class Standardization:
    retained: np.ndarray
    excluded: List[int]
    col_mean: np.ndarray
    col_std: np.ndarray
    target_mean: float


def standardize(raw_design: np.ndarray, raw_target: np.ndarray) -> Standardization:
    """Column means/stds (population convention) on the given rows and the
    zero-variance exclusion list."""
    if raw_design.shape[0] == 0:
        raise ContractViolation("no observations to standardize")
    mean = raw_design.mean(axis=0)
    std = raw_design.std(axis=0)
    top = std.max() if std.size else 0.0
    keep = std >= ZERO_VARIANCE_RTOL * top if top > 0.0 else np.zeros(std.shape, dtype=bool)
    if not np.any(keep):
        raise DegenerateError("every library column has zero variance on this data")
    retained = np.flatnonzero(keep)
    excluded = [int(j) for j in np.flatnonzero(~keep)]
    return Standardization(retained, excluded, mean[retained], std[retained], float(raw_target.mean()))


@dataclass
class RegressionSystem:
    """Weighted, standardized least-squares system.

    ``design`` and ``target`` are what the sparse solvers see. ``raw_design``
    (all library columns) and ``raw_target`` are the weighted but
    unstandardized quantities used by refinement.
    """

    design: np.ndarray
    target: np.ndarray
    col_mean: np.ndarray
    col_std: np.ndarray
    target_mean: float
    weights: np.ndarray
    excluded_cols: List[int]
    retained_cols: np.ndarray
    raw_design: np.ndarray
    raw_target: np.ndarray
    row_block: np.ndarray
    block_names: List[str] = field(default_factory=list)
    labels: List[str] = field(default_factory=list)

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]

    @property
    def n_cols(self) -> int:
        return self.design.shape[1]

    @property
    def n_terms(self) -> int:
        return self.raw_design.shape[1]

    @classmethod
    def from_raw(cls, raw_design, raw_target, weights, row_block, block_names=(), labels=()):
        st = standardize(raw_design, raw_target)
        design = (raw_design[:, st.retained] - st.col_mean) / st.col_std
        target = raw_target - st.target_mean
        return cls(
            design=design,
            target=target,
            col_mean=st.col_mean,
            col_std=st.col_std,
            target_mean=st.target_mean,
            weights=np.asarray(weights, dtype=float),
            excluded_cols=st.excluded,
            retained_cols=st.retained,
            raw_design=raw_design,
            raw_target=raw_target,
            row_block=np.asarray(row_block),
            block_names=list(block_names),
            labels=list(labels),
        )

    def subset(self, rows) -> "RegressionSystem":
        """System restricted to ``rows`` and restandardized on them. Mode
        weights are kept from the full dataset."""
        rows = np.asarray(rows)
        return RegressionSystem.from_raw(
            self.raw_design[rows], self.raw_target[rows], self.weights,
            self.row_block[rows], self.block_names, self.labels,
        )

    def back_transform(self, c_scaled) -> np.ndarray:
        return back_transform(self, c_scaled)

    def scale(self, c_phys) -> np.ndarray:
        """Inverse of back_transform on retained columns."""
        c_phys = np.asarray(c_phys, dtype=float)
        return c_phys[self.retained_cols] * self.col_std

    def standardized_rows(self, raw_rows: np.ndarray) -> np.ndarray:
        """Standardize foreign rows (e.g. a validation fold) with this
        system's column statistics."""
        return (raw_rows[:, self.retained_cols] - self.col_mean) / self.col_std

    def rss(self, c_scaled) -> float:
        r = self.target - self.design @ np.asarray(c_scaled, dtype=float)
        return float(r @ r)


def design_blocks(data: Dataset, lib: ModelLibrary, w=None) -> List[np.ndarray]:
    """Unweighted design block of every mode, columns in library order."""
    return [BlockColumns(lib, b.mode, b.params).matrix(w) for b in data.blocks]


def assemble(data: Dataset, lib: ModelLibrary, w=None, weighted: bool = True) -> RegressionSystem:
    """Weighted, stacked and standardized regression system.

    Zero-variance columns (relative threshold 1e-12 of the largest column
    std) are dropped and listed in ``excluded_cols``.
    """
    if not data.blocks or data.n_obs == 0:
        raise ContractViolation("cannot assemble an empty dataset")
    weights = mode_weights(data) if weighted else np.ones(len(data.blocks))
    blocks = design_blocks(data, lib, w)
    raw_design = np.vstack([wk * B for wk, B in zip(weights, blocks)])
    raw_target = np.concatenate([wk * b.observations for wk, b in zip(weights, data.blocks)])
    row_block = np.concatenate([np.full(b.n_obs, k) for k, b in enumerate(data.blocks)])
    return RegressionSystem.from_raw(
        raw_design, raw_target, weights, row_block, [b.name for b in data.blocks], lib.labels
    )


def back_transform(system: RegressionSystem, c_scaled) -> np.ndarray:
    """c*_j = c~_j / sigma_j on retained columns, zero on excluded ones."""
    c_scaled = np.asarray(c_scaled, dtype=float)
    if c_scaled.shape != (system.n_cols,):
        raise ContractViolation(
            f"expected {system.n_cols} scaled coefficients, got {c_scaled.shape}"
        )
    out = np.zeros(system.n_terms)
    out[system.retained_cols] = c_scaled / system.col_std
    return out
