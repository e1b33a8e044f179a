"""
Refinement of a selected active set on the weighted, unstandardized system,
hard thresholding, and fit metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .assembly import mode_weights
from .data import Dataset
from .errors import ContractViolation, DegenerateError
from .library import BlockColumns, ModelLibrary, check_consistency
from .solvers.nnls import ridge_nnls

THRESHOLD = 1e-6
LAMBDA_R = 1e-6
W_BOUNDS = (1e-3, 1e2)


class WeightedColumns:
    """Weighted, stacked design columns of a dataset as functions of w."""

    def __init__(self, data: Dataset, lib: ModelLibrary, weights=None):
        self.lib = lib
        self.weights = mode_weights(data) if weights is None else np.asarray(weights, dtype=float)
        self.blocks = [BlockColumns(lib, b.mode, b.params) for b in data.blocks]
        self.target = np.concatenate([wk * b.observations for wk, b in zip(self.weights, data.blocks)])

    def matrix(self, w, terms) -> np.ndarray:
        return np.vstack([wk * B.matrix(w, terms) for wk, B in zip(self.weights, self.blocks)])

    def matrix_dw(self, w, terms) -> np.ndarray:
        return np.vstack([wk * B.matrix_dw(w, terms) for wk, B in zip(self.weights, self.blocks)])


@dataclass
class DiscoveredModel:
    lib: ModelLibrary
    c_star: np.ndarray
    w_star: np.ndarray
    metrics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    converged: bool = True
    units: str = "Pa"

    @property
    def active_terms(self) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.c_star > 0.0)]

    @property
    def n_active(self) -> int:
        return len(self.active_terms)

    def consistency(self) -> Optional[dict]:
        return check_consistency(self.lib, self.c_star) if self.lib.is_isotropic else None

    def describe(self) -> str:
        parts = []
        for j in self.active_terms:
            term = self.lib.terms[j]
            label = term.label
            if term.has_slot:
                label = label.replace("w*", f"{self.w_star[j]:.4g}*")
            parts.append(f"{self.c_star[j]:.4g} {label}")
        return " + ".join(parts) if parts else "0"

    def to_dict(self) -> dict:
        terms = []
        for j in self.active_terms:
            t = self.lib.terms[j]
            terms.append({
                "index": j,
                "label": t.label,
                "term": t.to_dict(),
                "c": float(self.c_star[j]),
                "units": self.units,
                "w": float(self.w_star[j]) if t.has_slot else None,
            })
        return {
            "library": self.lib.to_dict(),
            "n_active": self.n_active,
            "terms": terms,
            "c_star": [float(x) for x in self.c_star],
            "w_star": [None if np.isnan(x) else float(x) for x in self.w_star],
            "units": self.units,
            "converged": self.converged,
            "consistency": self.consistency(),
            "metrics": self.metrics,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d) -> "DiscoveredModel":
        lib = ModelLibrary.from_dict(d["library"])
        w = np.array([np.nan if x is None else x for x in d["w_star"]], dtype=float)
        return cls(lib, np.array(d["c_star"], dtype=float), w, d.get("metrics", {}),
                   d.get("provenance", {}), d.get("converged", True), d.get("units", "Pa"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "DiscoveredModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def hard_threshold(c, threshold: float = THRESHOLD) -> np.ndarray:
    """Zero every coefficient below ``threshold``; idempotent."""
    c = np.array(c, dtype=float)
    c[c < threshold] = 0.0
    return c


def _full_w(lib: ModelLibrary, w) -> np.ndarray:
    return lib.default_w() if w is None else np.array(w, dtype=float)


def _check_active(lib: ModelLibrary, active) -> List[int]:
    active = sorted(int(j) for j in active)
    if not active:
        raise DegenerateError("empty active set; nothing to refine")
    if active[0] < 0 or active[-1] >= lib.n_terms:
        raise ContractViolation("active index outside the library")
    return active


def refit_linear(data: Dataset, lib: ModelLibrary, active: Sequence[int], lambda_R: float = LAMBDA_R,
                 w=None, threshold: float = THRESHOLD, weights=None, cols: Optional[WeightedColumns] = None,
                 ) -> DiscoveredModel:
    """Ridge-regularized non-negative least squares on the active columns
    with nonlinear slots held at ``w`` (default: the library's w_bar)."""
    active = _check_active(lib, active)
    cols = cols or WeightedColumns(data, lib, weights)
    w_full = _full_w(lib, w)
    A = cols.matrix(w_full, active)
    cA = ridge_nnls(A, cols.target, lambda_R)
    c = np.zeros(lib.n_terms)
    c[active] = cA
    c = hard_threshold(c, threshold)
    model = DiscoveredModel(lib, c, w_full, units=data.units)
    model.metrics = evaluate_metrics(model, data)
    return model


def residual_and_jacobian(cols: WeightedColumns, active, slots, x, lambda_R):
    """Residual of the joint (c, w) problem and its analytic Jacobian.

    ``x`` holds c_A followed by w for the active slot terms.
    """
    lib = cols.lib
    nA = len(active)
    w_full = lib.default_w()
    w_full[slots] = x[nA:]
    cA = x[:nA]
    Psi = cols.matrix(w_full, active)
    r = Psi @ cA - cols.target
    J_c = Psi
    if slots:
        dPsi = cols.matrix_dw(w_full, slots)
        pos = [active.index(s) for s in slots]
        J_w = dPsi * cA[pos]
    else:
        J_w = np.zeros((r.size, 0))
    J = np.hstack([J_c, J_w])
    if lambda_R > 0.0:
        s = np.sqrt(lambda_R)
        r = np.concatenate([r, s * cA])
        J = np.vstack([J, np.hstack([s * np.eye(nA), np.zeros((nA, len(slots)))])])
    return r, J


def refit_nonlinear(data: Dataset, lib: ModelLibrary, active: Sequence[int], lambda_R: float = LAMBDA_R,
                    w_bounds=W_BOUNDS, threshold: float = THRESHOLD, weights=None, w0=None,
                    ftol: float = 1e-10, gtol: float = 1e-8, max_nfev: int = 500) -> DiscoveredModel:
    """Joint trust-region least squares over (c_A >= 0, w_A in bounds),
    started from the linear refit at w0 (default w_bar)."""
    active = _check_active(lib, active)
    slots = [j for j in active if lib.terms[j].has_slot]
    cols = WeightedColumns(data, lib, weights)
    w_start = _full_w(lib, w0)
    if not slots:
        return refit_linear(data, lib, active, lambda_R, w_start, threshold, cols=cols)
    lo, hi = w_bounds
    w_start[slots] = np.clip(w_start[slots], lo, hi)
    A = cols.matrix(w_start, active)
    c0 = ridge_nnls(A, cols.target, lambda_R)
    x0 = np.concatenate([c0, w_start[slots]])
    nA = len(active)
    lower = np.concatenate([np.zeros(nA), np.full(len(slots), lo)])
    upper = np.concatenate([np.full(nA, np.inf), np.full(len(slots), hi)])
    # Keep the start strictly inside the box as the interior method requires.
    x0 = np.clip(x0, lower + 1e-12 * np.maximum(1.0, np.abs(lower)), upper)

    cache = {}

    def evaluate(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = residual_and_jacobian(cols, active, slots, x, lambda_R)
        return cache[key]

    result = least_squares(
        lambda x: evaluate(x)[0], x0, jac=lambda x: evaluate(x)[1], bounds=(lower, upper),
        method="trf", ftol=ftol, gtol=gtol, xtol=1e-12, max_nfev=max_nfev, x_scale="jac",
    )
    x = result.x
    cost0 = 0.5 * float(evaluate(x0)[0] @ evaluate(x0)[0])
    if result.cost > cost0:
        x = x0
    c = np.zeros(lib.n_terms)
    c[active] = np.maximum(x[:nA], 0.0)
    w_full = lib.default_w()
    w_full[slots] = x[nA:]
    c = hard_threshold(c, threshold)
    model = DiscoveredModel(lib, c, w_full, converged=bool(result.status > 0), units=data.units)
    model.metrics = evaluate_metrics(model, data)
    model.provenance["refine_nfev"] = int(result.nfev)
    model.provenance["refine_status"] = int(result.status)
    return model


def refine(data: Dataset, lib: ModelLibrary, active: Sequence[int], lambda_R: float = LAMBDA_R,
           w_bounds=W_BOUNDS, threshold: float = THRESHOLD, optimize_w: bool = True,
           **kwargs) -> DiscoveredModel:
    """Linear refit when no active term has a nonlinear slot (or when
    ``optimize_w`` is off), joint nonlinear refit otherwise."""
    active = _check_active(lib, active)
    if optimize_w and any(lib.terms[j].has_slot for j in active):
        return refit_nonlinear(data, lib, active, lambda_R, w_bounds, threshold, **kwargs)
    return refit_linear(data, lib, active, lambda_R, threshold=threshold)


def _r2(y, pred) -> Optional[float]:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    return 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot


def prediction(model: DiscoveredModel, data: Dataset) -> List[np.ndarray]:
    """Predicted stress per block, shaped like each block's stress array."""
    out = []
    active = model.active_terms
    for b in data.blocks:
        cols = BlockColumns(model.lib, b.mode, b.params)
        pred = cols.matrix(model.w_star, active) @ model.c_star[active] if active else np.zeros(cols.n_rows)
        out.append(pred.reshape(b.stress.shape))
    return out


def evaluate_metrics(model: DiscoveredModel, data: Dataset) -> dict:
    """Per-block and overall R^2, RMSE (dataset units) and NRMSE (RMSE over
    the block's RMS stress). R^2 is None for a block with constant stress."""
    preds = prediction(model, data)
    modes: Dict[str, dict] = {}
    nrmse, rmse_list = [], []
    for b, pred in zip(data.blocks, preds):
        y = b.observations
        p = pred.reshape(-1)
        rmse = float(np.sqrt(np.mean((y - p) ** 2)))
        rms = float(np.sqrt(np.mean(y ** 2)))
        entry = {
            "kind": b.mode.kind.value,
            "components": list(b.mode.components),
            "n_obs": int(y.size),
            "R2": _r2(y, p),
            "RMSE": rmse,
            "NRMSE": rmse / rms if rms > 0.0 else None,
        }
        modes[b.name] = entry
        rmse_list.append(rmse)
        if entry["NRMSE"] is not None:
            nrmse.append(entry["NRMSE"])
    y_all = data.observations
    p_all = np.concatenate([p.reshape(-1) for p in preds])
    r2_modes = [m["R2"] for m in modes.values() if m["R2"] is not None]
    return {
        "modes": modes,
        "R2": _r2(y_all, p_all),
        "RMSE": float(np.sqrt(np.mean((y_all - p_all) ** 2))),
        "AvgNRMSE": float(np.mean(nrmse)) if nrmse else None,
        "AvgRMSE": float(np.mean(rmse_list)),
        "R2_min": float(min(r2_modes)) if r2_modes else None,
        "units": data.units,
    }
