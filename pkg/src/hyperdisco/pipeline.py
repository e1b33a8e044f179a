"""
End-to-end discovery runs: configuration, the (algorithm x criterion) grid,
report files and the synthetic benchmark sweep.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .assembly import RegressionSystem, assemble, back_transform
from .data import (
    BENCHMARK_TRUTHS,
    Dataset,
    GroundTruth,
    NoiseSpec,
    benchmark_truth,
    generate_synthetic,
    load_csv,
    load_treloar,
)
from .errors import ConfigurationError, DiscoveryError
from .kinematics import LoadingMode
from .library import ModelLibrary
from .refine import LAMBDA_R, THRESHOLD, W_BOUNDS, DiscoveredModel, evaluate_metrics, prediction, refine
from .selection import CRITERIA, SelectionResult, run_selection
from .solvers import ALGORITHMS, SolutionPath, solve_path

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Settings of one discovery run.

    ``dataset`` is one of ``{"csv": path}``, ``{"builtin": "treloar"}`` or
    ``{"synthetic": {...}}`` with keys truth, modes, n_per_mode, range,
    noise.
    """

    dataset: dict
    library: Optional[dict] = None
    algorithms: Tuple[str, ...] = ALGORITHMS
    criteria: Tuple[str, ...] = CRITERIA
    K: int = 5
    seed: Optional[int] = None
    lambda_grid: dict = field(default_factory=lambda: {"n": 100, "ratio": 1e-4})
    max_steps: Optional[int] = None
    lambda_R: float = LAMBDA_R
    w_bounds: Tuple[float, float] = W_BOUNDS
    threshold: float = THRESHOLD
    optimize_w: bool = True
    stratify: bool = False
    output_dir: Optional[str] = None
    base_dir: str = "."

    def __post_init__(self):
        self.algorithms = tuple(a.upper() for a in self.algorithms)
        self.criteria = tuple(c.upper() for c in self.criteria)
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigurationError(f"unknown algorithm {a!r}")
        for c in self.criteria:
            if c not in CRITERIA:
                raise ConfigurationError(f"unknown criterion {c!r}")
        if self.K < 2:
            raise ConfigurationError("K must be at least 2")
        lo, hi = self.w_bounds
        if not 0.0 < lo < hi:
            raise ConfigurationError("w bounds must satisfy 0 < lower < upper")
        if len(self.dataset) != 1 or next(iter(self.dataset)) not in ("csv", "builtin", "synthetic"):
            raise ConfigurationError("dataset must have exactly one of csv, builtin, synthetic")
        if "csv" in self.dataset and not self.csv_path.exists():
            raise ConfigurationError(f"dataset file {self.csv_path} does not exist")
        noise = self.dataset.get("synthetic", {}).get("noise", 0.0)
        if (noise > 0.0 or "CV" in self.criteria) and self.seed is None:
            raise ConfigurationError("a seed is required when noise is added or CV is used")

    @property
    def csv_path(self) -> Path:
        p = Path(self.dataset["csv"])
        return p if p.is_absolute() else Path(self.base_dir) / p

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "dataset" not in d:
            raise ConfigurationError("config needs a dataset")
        kwargs = dict(d)
        kwargs.setdefault("base_dir", str(base_dir))
        for key in ("algorithms", "criteria", "w_bounds"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file {path} does not exist")
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "library": self.library,
            "algorithms": list(self.algorithms),
            "criteria": list(self.criteria),
            "K": self.K,
            "seed": self.seed,
            "lambda_grid": self.lambda_grid,
            "max_steps": self.max_steps,
            "lambda_R": self.lambda_R,
            "w_bounds": list(self.w_bounds),
            "threshold": self.threshold,
            "optimize_w": self.optimize_w,
            "stratify": self.stratify,
        }


def parse_truth(spec) -> GroundTruth:
    if isinstance(spec, str):
        return benchmark_truth(spec)
    return GroundTruth.from_dict(spec)


def parse_modes(specs) -> List[LoadingMode]:
    modes = []
    for m in specs:
        if isinstance(m, str):
            modes.append(LoadingMode(m, ("P11",)))
        else:
            modes.append(LoadingMode(m["kind"], tuple(m.get("components", ("P11",)))))
    return modes


@dataclass
class LoadedData:
    data: Dataset
    lib: ModelLibrary
    clean: Optional[Dataset] = None
    truth: Optional[GroundTruth] = None


def load_dataset(config: RunConfig) -> LoadedData:
    src = config.dataset
    if "csv" in src:
        data = load_csv(config.csv_path)
        if config.library is None:
            raise ConfigurationError("a library spec is required for CSV datasets")
        return LoadedData(data, ModelLibrary.from_dict(config.library))
    if "builtin" in src:
        if src["builtin"] != "treloar":
            raise ConfigurationError(f"unknown builtin dataset {src['builtin']!r}")
        lib = ModelLibrary.from_dict(config.library or {
            "type": "isotropic", "mr_order": 3, "ogden_alphas": [-4, -3, -1, 1, 3, 4]})
        return LoadedData(load_treloar(), lib)
    syn = src["synthetic"]
    truth = parse_truth(syn["truth"])
    modes = parse_modes(syn.get("modes", ("UT", "PS", "EBT")))
    noise = NoiseSpec(float(syn.get("noise", 0.0)), config.seed)
    data, clean = generate_synthetic(
        truth, modes, int(syn.get("n_per_mode", 60)), tuple(syn.get("range", (0.6, 5.0))),
        noise, syn.get("units", "Pa"), return_clean=True,
    )
    lib = ModelLibrary.from_dict(config.library) if config.library else truth.lib
    return LoadedData(data, lib, clean, truth)


def path_options(config: RunConfig, algorithm: str) -> dict:
    if algorithm == "LASSO":
        grid = config.lambda_grid
        if isinstance(grid, (list, tuple)):
            return {"lambdas": list(grid)}
        return {"n_lambdas": int(grid.get("n", 100)), "ratio": float(grid.get("ratio", 1e-4))}
    return {"max_steps": config.max_steps} if config.max_steps is not None else {}


@dataclass
class CellResult:
    algorithm: str
    criterion: str
    model: Optional[DiscoveredModel] = None
    selection: Optional[SelectionResult] = None
    error: Optional[str] = None
    selected_point: Optional[int] = None
    c_selected: Optional[np.ndarray] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def name(self) -> str:
        return f"{self.algorithm.lower()}_{self.criterion.lower()}"


def run_cell(system: RegressionSystem, path: SolutionPath, path_time: float, loaded: LoadedData,
             config: RunConfig, algorithm: str, criterion: str) -> CellResult:
    cell = CellResult(algorithm, criterion)
    t0 = time.perf_counter()
    sel = run_selection(system, algorithm, path, criterion, config.K, config.seed, config.stratify,
                        path_options(config, algorithm))
    cell.selection = sel
    cell.selected_point = sel.chosen_index
    cell.timings["sparse_s"] = path_time + time.perf_counter() - t0
    point = path.points[sel.chosen_index]
    c_phys = back_transform(system, point.c_scaled)
    cell.c_selected = c_phys
    active = [int(j) for j in np.flatnonzero(c_phys > 0.0)]
    t1 = time.perf_counter()
    model = refine(loaded.data, loaded.lib, active, config.lambda_R, tuple(config.w_bounds),
                   config.threshold, config.optimize_w)
    cell.timings["refine_s"] = time.perf_counter() - t1
    model.provenance.update({
        "algorithm": algorithm,
        "criterion": criterion,
        "seed": config.seed,
        "path_point": int(sel.chosen_index),
        "path_reason": path.reason,
        "selected_active_before_refine": active,
    })
    if loaded.clean is not None:
        model.metrics["vs_clean"] = evaluate_metrics(model, loaded.clean)
    cell.model = model
    return cell


def discover(config: RunConfig, cells: Optional[Sequence[Tuple[str, str]]] = None,
             loaded: Optional[LoadedData] = None) -> Tuple[List[CellResult], Dict[str, SolutionPath], RegressionSystem, LoadedData]:
    """Run every requested (algorithm, criterion) cell in memory.

    Failures inside a cell are captured on the CellResult so the remaining
    cells still run.
    """
    loaded = loaded or load_dataset(config)
    system = assemble(loaded.data, loaded.lib)
    if cells is None:
        cells = [(a, c) for a in config.algorithms for c in config.criteria]
    cells = [(a.upper(), c.upper()) for a, c in cells]
    paths: Dict[str, SolutionPath] = {}
    path_times: Dict[str, float] = {}
    results = []
    for algorithm, criterion in cells:
        try:
            if algorithm not in paths:
                t0 = time.perf_counter()
                paths[algorithm] = solve_path(system, algorithm, **path_options(config, algorithm))
                path_times[algorithm] = time.perf_counter() - t0
            results.append(run_cell(system, paths[algorithm], path_times[algorithm], loaded, config,
                                    algorithm, criterion))
        except DiscoveryError as exc:
            log.warning("cell %s/%s failed: %s", algorithm, criterion, exc)
            results.append(CellResult(algorithm, criterion, error=f"{type(exc).__name__}: {exc}"))
    return results, paths, system, loaded


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_path_files(out: Path, algorithm: str, path: SolutionPath, system: RegressionSystem) -> None:
    labels = system.labels or [f"phi{j}" for j in range(system.n_terms)]
    rows = []
    for t, p in enumerate(path.points):
        c = back_transform(system, p.c_scaled)
        rows.append([t, repr(float(p.knob)), repr(p.rss), p.n_active, p.note] + [repr(float(x)) for x in c])
    _write_csv(out / f"{algorithm.lower()}_path.csv", ["step", "knob", "rss", "n_active", "note"] + labels, rows)
    grid = path.activation_grid(system.n_cols)
    full = np.zeros((system.n_terms, grid.shape[1]), dtype=int)
    full[system.retained_cols] = grid
    _write_csv(out / f"{algorithm.lower()}_activation.csv", ["term"] + [f"step{t}" for t in range(grid.shape[1])],
               [[labels[j]] + list(map(int, full[j])) for j in range(system.n_terms)])


def write_predictions(path: Path, model: DiscoveredModel, data: Dataset) -> None:
    rows = []
    for b, pred in zip(data.blocks, prediction(model, data)):
        for params, meas, pr in zip(b.params, b.stress, pred):
            p1 = repr(float(params[0]))
            p2 = repr(float(params[1])) if params.size > 1 else ""
            for comp, m, q in zip(b.mode.components, meas, pr):
                rows.append([b.name, b.mode.kind.value, comp, p1, p2, repr(float(m)), repr(float(q))])
    _write_csv(path, ["block_id", "mode_kind", "component", "p1", "p2", "measured", "predicted"], rows)


def cell_report(cell: CellResult, config: RunConfig) -> dict:
    report = {"algorithm": cell.algorithm, "criterion": cell.criterion, "status": "ok" if cell.ok else "failed",
              "config": config.to_dict(), "timings": cell.timings}
    if not cell.ok:
        report["error"] = cell.error
        return report
    report["model"] = cell.model.to_dict()
    report["model"]["provenance"]["timings"] = cell.timings
    report["description"] = cell.model.describe()
    return report


def run_discovery(config: RunConfig, out_dir=None, cells=None) -> List[CellResult]:
    """Run the requested cells and write reports under ``out_dir``.

    Layout: ``<alg>_<crit>/report.json``, ``criterion.csv`` and
    ``predictions.csv`` per cell, plus ``<alg>_path.csv``,
    ``<alg>_activation.csv``, ``dataset.csv`` and ``summary.json``.
    """
    loaded = load_dataset(config)
    results, paths, system, loaded = discover(config, cells, loaded)
    out = Path(out_dir or config.output_dir or "results")
    out.mkdir(parents=True, exist_ok=True)
    from .data import save_csv

    save_csv(loaded.data, out / "dataset.csv")
    for algorithm, path in paths.items():
        write_path_files(out, algorithm, path, system)
    summary = []
    for cell in results:
        cdir = out / cell.name
        cdir.mkdir(exist_ok=True)
        report = cell_report(cell, config)
        (cdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, allow_nan=False, default=_json_default))
        if cell.ok:
            cell.selection.write_csv(cdir / "criterion.csv")
            write_predictions(cdir / "predictions.csv", cell.model, loaded.data)
            cell.model.save(cdir / "model.json")
        summary.append({"cell": cell.name, "status": report["status"],
                        "n_active": cell.model.n_active if cell.ok else None,
                        "description": report.get("description"), "error": cell.error})
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return results


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


BENCHMARK_COLUMNS = [
    "scenario", "truth", "noise", "algorithm", "criterion", "status", "ground_truth_recovered",
    "n_active", "R2_UT", "R2_PS", "R2_EBT", "AvgNRMSE", "sparse_s", "refine_s", "error",
]


def benchmark(scenarios: Sequence[dict], out_dir=None, seed: int = 0) -> List[dict]:
    """Sweep synthetic scenarios over the requested cells.

    Each scenario is ``{"truth": "O2", "noise": 0.05, "seed": 1}`` plus
    optional ``name``, ``algorithms``, ``criteria``. Metrics are evaluated
    against the noise-free data.
    """
    rows = []
    for sc in scenarios:
        truth_name = sc["truth"] if isinstance(sc["truth"], str) else sc["truth"].get("name", "custom")
        noise = float(sc.get("noise", 0.0))
        name = sc.get("name", f"{truth_name}@{noise:g}")
        base = {"scenario": name, "truth": truth_name, "noise": noise}
        try:
            config = RunConfig(
                dataset={"synthetic": {"truth": sc["truth"], "noise": noise,
                                       "n_per_mode": sc.get("n_per_mode", 60)}},
                algorithms=tuple(sc.get("algorithms", ALGORITHMS)),
                criteria=tuple(sc.get("criteria", CRITERIA)),
                seed=sc.get("seed", seed),
                K=sc.get("K", 5),
            )
            results, _, _, loaded = discover(config)
        except DiscoveryError as exc:
            rows.append({**base, "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
            continue
        truth_support = set(loaded.truth.support)
        for cell in results:
            row = {**base, "algorithm": cell.algorithm, "criterion": cell.criterion,
                   "status": "ok" if cell.ok else "failed", "error": cell.error}
            if cell.ok:
                m = cell.model.metrics["vs_clean"]
                r2 = {v["kind"]: v["R2"] for v in m["modes"].values()}
                row.update({
                    "ground_truth_recovered": set(cell.model.active_terms) == truth_support,
                    "n_active": cell.model.n_active,
                    "R2_UT": r2.get("UT"), "R2_PS": r2.get("PS"), "R2_EBT": r2.get("EBT"),
                    "AvgNRMSE": m["AvgNRMSE"],
                    "sparse_s": cell.timings.get("sparse_s"), "refine_s": cell.timings.get("refine_s"),
                })
            rows.append(row)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "benchmark.csv").open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=BENCHMARK_COLUMNS)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in BENCHMARK_COLUMNS})
        (out / "benchmark.json").write_text(json.dumps(rows, indent=2, default=_json_default))
    return rows


def default_scenarios(seed: int = 0) -> List[dict]:
    """The isotropic synthetic grid: four truths at 0, 5 and 10% noise."""
    return [{"truth": t, "noise": n, "seed": seed} for t in BENCHMARK_TRUTHS for n in (0.0, 0.05, 0.10)]
