"""
Datasets: containers, synthetic generation from ground-truth models, and
CSV input/output.

CSV layout, one observation per row::

    # units: kPa
    mode_kind,block_id,p1,p2,component,value
    UT,ut,1.5,,P11,0.32

Consecutive rows of a block that share (p1, p2) form one sample; a sample
with two measured components therefore spans two rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation, DomainError, ParseError
from .kinematics import LoadingMode, ModeKind
from .library import BlockColumns, ModelLibrary, make_isotropic_library

UNITS = ("Pa", "kPa", "MPa")
CSV_HEADER = ["mode_kind", "block_id", "p1", "p2", "component", "value"]


@dataclass
class ModeBlock:
    """Samples of one loading protocol.

    ``params`` has shape (n_samples, n_params); ``stress`` has shape
    (n_samples, n_components) and follows ``mode.components``.
    """

    mode: LoadingMode
    params: np.ndarray
    stress: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        if self.params.ndim == 1:
            self.params = self.params[:, None]
        self.stress = np.asarray(self.stress, dtype=float)
        if self.stress.ndim == 1:
            self.stress = self.stress[:, None]
        if not self.name:
            self.name = self.mode.kind.value
        n = self.params.shape[0]
        if n < 1:
            raise ContractViolation(f"block {self.name} has no samples")
        if self.stress.shape != (n, len(self.mode.components)):
            raise ContractViolation(
                f"block {self.name}: stress shape {self.stress.shape} does not match "
                f"{n} samples x {len(self.mode.components)} components"
            )
        if not (np.all(np.isfinite(self.params)) and np.all(np.isfinite(self.stress))):
            raise ContractViolation(f"block {self.name} contains non-finite values")

    @property
    def n_samples(self) -> int:
        return self.params.shape[0]

    @property
    def n_obs(self) -> int:
        return self.stress.size

    @property
    def observations(self) -> np.ndarray:
        """Stress vector, sample-major."""
        return self.stress.reshape(-1)

    def with_stress(self, stress) -> "ModeBlock":
        return ModeBlock(self.mode, self.params.copy(), np.asarray(stress).reshape(self.stress.shape), self.name)


@dataclass
class Dataset:
    blocks: List[ModeBlock]
    units: str = "Pa"

    def __post_init__(self):
        if self.units not in UNITS:
            raise ConfigurationError(f"unknown stress unit {self.units!r}")

    @property
    def n_obs(self) -> int:
        return sum(b.n_obs for b in self.blocks)

    def with_observations(self, values) -> "Dataset":
        values = np.asarray(values, dtype=float)
        out, pos = [], 0
        for b in self.blocks:
            out.append(b.with_stress(values[pos:pos + b.n_obs]))
            pos += b.n_obs
        return Dataset(out, self.units)

    @property
    def observations(self) -> np.ndarray:
        return np.concatenate([b.observations for b in self.blocks]) if self.blocks else np.zeros(0)


@dataclass
class GroundTruth:
    name: str
    lib: ModelLibrary
    coeffs: np.ndarray
    w: Optional[np.ndarray] = None

    @property
    def support(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(np.asarray(self.coeffs) > 0)]

    def to_dict(self):
        return {
            "name": self.name,
            "library": self.lib.to_dict(),
            "coeffs": [float(c) for c in self.coeffs],
            "w": None if self.w is None else [None if np.isnan(x) else float(x) for x in self.w],
        }

    @classmethod
    def from_dict(cls, d) -> "GroundTruth":
        if set(d) == {"name"} or ("library" not in d and d.get("name") in BENCHMARK_TRUTHS):
            return benchmark_truth(d["name"])
        lib = ModelLibrary.from_dict(d["library"])
        w = d.get("w")
        return cls(d.get("name", "custom"), lib, np.array(d["coeffs"], dtype=float),
                   None if w is None else np.array([np.nan if x is None else x for x in w], dtype=float))


@dataclass
class NoiseSpec:
    relative_std: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.relative_std:
            raise ConfigurationError("relative noise level must be non-negative")
        if self.relative_std > 0.0 and self.seed is None:
            raise ConfigurationError("a seed is required when noise is added")


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox (counter-based, 64-bit) generator used for all noise and
    fold shuffling."""
    return np.random.Generator(np.random.Philox(int(seed)))


# Library used by every isotropic synthetic benchmark and by Treloar.
ISOTROPIC_ALPHAS = (-4.0, -3.0, -1.0, 1.0, 3.0, 4.0)


def _iso_truth(name, mr_order, alphas, coeffs) -> GroundTruth:
    lib = make_isotropic_library(mr_order, alphas)
    c = np.zeros(lib.n_terms)
    for term, value in coeffs.items():
        c[lib.labels.index(term)] = value
    return GroundTruth(name, lib, c)


def benchmark_truth(name: str) -> GroundTruth:
    """Ground-truth models of the isotropic synthetic benchmarks (Pa).

    Each comes with the family-restricted discovery library: Ogden-only for
    O2, Mooney-Rivlin-only for MR2, the combined 15-term library otherwise.
    """
    if name == "O2":
        return _iso_truth("O2", 0, ISOTROPIC_ALPHAS, {"sum(lambda^-3-1)": 16.0, "sum(lambda^3-1)": 8.0})
    if name == "MR2":
        return _iso_truth("MR2", 3, (), {"(I1-3)": 40.0, "(I2-3)": 20.0})
    if name == "MR1O1":
        return _iso_truth("MR1O1", 3, ISOTROPIC_ALPHAS, {"(I2-3)": 40.0, "sum(lambda^-3-1)": 8.0})
    if name == "MR2O2":
        return _iso_truth("MR2O2", 3, ISOTROPIC_ALPHAS, {
            "(I1-3)": 40.0, "(I2-3)": 20.0, "sum(lambda^-3-1)": 16.0, "sum(lambda^1-1)": 800.0,
        })
    raise ConfigurationError(f"unknown benchmark ground truth {name!r}")


BENCHMARK_TRUTHS = ("O2", "MR2", "MR1O1", "MR2O2")


def forward_stress(lib: ModelLibrary, coeffs, mode: LoadingMode, params, w=None) -> np.ndarray:
    """Model stress for one block, shape (n_samples, n_components)."""
    cols = BlockColumns(lib, mode, params)
    coeffs = np.asarray(coeffs, dtype=float)
    active = [j for j in range(lib.n_terms) if coeffs[j] != 0.0]
    pred = cols.matrix(w, active) @ coeffs[active] if active else np.zeros(cols.n_rows)
    return pred.reshape(cols.n_samples, len(mode.components))


def predict(lib: ModelLibrary, coeffs, data: Dataset, w=None) -> Dataset:
    """Dataset holding the model's predicted stresses at data's loading states."""
    blocks = [b.with_stress(forward_stress(lib, coeffs, b.mode, b.params, w)) for b in data.blocks]
    return Dataset(blocks, data.units)


def stretch_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Equispaced grid on [lo, hi]; a node landing on 1 is moved halfway
    towards its nearest neighbour so no sample sits at the reference state."""
    if n < 2:
        raise ContractViolation("need at least two samples per mode")
    grid = np.linspace(lo, hi, n)
    hit = np.isclose(grid, 1.0, rtol=0.0, atol=1e-12)
    if np.any(hit):
        step = (hi - lo) / (n - 1)
        grid[hit] = 1.0 + 0.5 * step if hi > 1.0 else 1.0 - 0.5 * step
    return grid


def add_noise(clean: Dataset, noise: NoiseSpec) -> Dataset:
    """Independent Gaussian noise per observation with std proportional to
    the magnitude of the clean value."""
    if noise.relative_std == 0.0:
        return Dataset([b.with_stress(b.stress.copy()) for b in clean.blocks], clean.units)
    rng = make_rng(noise.seed)
    values = clean.observations
    noisy = values + noise.relative_std * np.abs(values) * rng.standard_normal(values.size)
    return clean.with_observations(noisy)


def generate_synthetic(
    truth: GroundTruth,
    modes: Sequence[LoadingMode],
    n_per_mode: int = 60,
    stretch_range=(0.6, 5.0),
    noise: Optional[NoiseSpec] = None,
    units: str = "Pa",
    return_clean: bool = False,
):
    """Sample the ground-truth model on equispaced grids and add noise.

    Two-parameter modes (BT, ANISO_BT) use the same value for both stretches.
    With ``return_clean`` the noise-free dataset is returned as well.
    """
    lo, hi = stretch_range
    blocks = []
    for mode in modes:
        if not mode.kind.is_shear and lo <= 0.0:
            raise DomainError("stretch range must be strictly positive")
        grid = np.linspace(lo, hi, n_per_mode) if mode.kind.is_shear else stretch_grid(lo, hi, n_per_mode)
        params = np.repeat(grid[:, None], mode.kind.n_params, axis=1)
        stress = forward_stress(truth.lib, truth.coeffs, mode, params, truth.w)
        blocks.append(ModeBlock(mode, params, stress))
    clean = Dataset(blocks, units)
    noisy = add_noise(clean, noise or NoiseSpec())
    return (noisy, clean) if return_clean else noisy


def isotropic_benchmark(name: str, noise_level: float = 0.0, seed: Optional[int] = None,
                        n_per_mode: int = 60, return_clean: bool = False):
    """UT/PS/EBT P11 data on lambda in [0.6, 5.0] for one benchmark truth."""
    truth = benchmark_truth(name)
    modes = [LoadingMode(k, ("P11",)) for k in ("UT", "PS", "EBT")]
    return generate_synthetic(truth, modes, n_per_mode, (0.6, 5.0),
                              NoiseSpec(noise_level, seed), "Pa", return_clean)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_csv(data: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# units: {data.units}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for b in data.blocks:
            for params, stress in zip(b.params, b.stress):
                p1 = _fmt(params[0])
                p2 = _fmt(params[1]) if params.size > 1 else ""
                for comp, value in zip(b.mode.components, stress):
                    writer.writerow([b.mode.kind.value, b.name, p1, p2, comp, _fmt(value)])


def _parse_float(cell: str, row: int, what: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"non-numeric {what} {cell!r}", row) from None


def parse_csv(text: str) -> Dataset:
    units = "Pa"
    lines = text.splitlines()
    body = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].partition(":")
            if key.strip().lower() == "units":
                units = value.strip()
                if units not in UNITS:
                    raise ParseError(f"unknown units {units!r}", lineno)
            continue
        body.append((lineno, line))
    if not body:
        raise ParseError("empty dataset file")
    header_row, header_line = body[0]
    header = [h.strip() for h in next(csv.reader([header_line]))]
    missing = [c for c in CSV_HEADER if c not in header]
    if missing:
        raise ParseError(f"missing column(s) {', '.join(missing)}", header_row)
    col = {name: header.index(name) for name in CSV_HEADER}
    if len(body) == 1:
        raise ParseError("dataset file has a header but no observations")

    # block_id -> dict(kind, samples: list of (params, {component: value}))
    blocks: Dict[str, dict] = {}
    order: List[str] = []
    for row, line in body[1:]:
        cells = [c.strip() for c in next(csv.reader([line]))]
        if len(cells) < len(header):
            raise ParseError("missing cells", row)
        try:
            kind = ModeKind.parse(cells[col["mode_kind"]])
        except ConfigurationError:
            raise ParseError(f"unknown mode label {cells[col['mode_kind']]!r}", row) from None
        bid = cells[col["block_id"]]
        p1 = _parse_float(cells[col["p1"]], row, "p1")
        p2_cell = cells[col["p2"]]
        if kind.n_params == 2:
            if not p2_cell:
                raise ParseError(f"mode {kind.value} needs p2", row)
            params = (p1, _parse_float(p2_cell, row, "p2"))
        else:
            params = (p1,)
        comp = cells[col["component"]]
        value = _parse_float(cells[col["value"]], row, "value")
        if bid not in blocks:
            blocks[bid] = {"kind": kind, "samples": [], "row": row}
            order.append(bid)
        entry = blocks[bid]
        if entry["kind"] is not kind:
            raise ParseError(f"block {bid!r} mixes modes", row)
        samples = entry["samples"]
        if samples and samples[-1][0] == params and comp not in samples[-1][1]:
            samples[-1][1][comp] = value
        else:
            samples.append((params, {comp: value}))

    out = []
    for bid in order:
        entry = blocks[bid]
        comps = tuple(entry["samples"][0][1])
        for params, vals in entry["samples"]:
            if tuple(vals) != comps:
                raise ParseError(f"block {bid!r} has inconsistent components", entry["row"])
        try:
            mode = LoadingMode(entry["kind"], comps)
        except (ConfigurationError, ContractViolation) as exc:
            raise ParseError(str(exc), entry["row"]) from None
        params = np.array([p for p, _ in entry["samples"]], dtype=float)
        stress = np.array([[v[c] for c in comps] for _, v in entry["samples"]], dtype=float)
        out.append(ModeBlock(mode, params, stress, bid))
    return Dataset(out, units)


def load_csv(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"dataset file {path} does not exist")
    return parse_csv(path.read_text())


def load_treloar() -> Dataset:
    """Treloar's (1944) vulcanized rubber data: UT, PS and EBT nominal
    stress P11 in MPa."""
    text = resources.files("hyperdisco.datasets").joinpath("treloar.csv").read_text()
    return parse_csv(text)


def to_json_dict(data: Dataset) -> dict:
    return {
        "units": data.units,
        "blocks": [
            {"kind": b.mode.kind.value, "name": b.name, "components": list(b.mode.components),
             "params": b.params.tolist(), "stress": b.stress.tolist()}
            for b in data.blocks
        ],
    }


def generate_from_params(truth: GroundTruth, blocks: Sequence, noise: Optional[NoiseSpec] = None,
                         units: str = "Pa", return_clean: bool = False):
    """Forward-generate stresses at explicit loading states.

    ``blocks`` is a sequence of (name, LoadingMode, params) triples.
    """
    out = []
    for name, mode, params in blocks:
        params = np.asarray(params, dtype=float)
        stress = forward_stress(truth.lib, truth.coeffs, mode, params, truth.w)
        out.append(ModeBlock(mode, params, stress, name))
    clean = Dataset(out, units)
    noisy = add_noise(clean, noise or NoiseSpec())
    return (noisy, clean) if return_clean else noisy


# Fiber:normal stretch ratios of the biaxial protocols and shear modes of a
# standard myocardium test series.
BIAXIAL_RATIOS = ((1.0, 1.0), (1.0, 0.75), (0.75, 1.0), (1.0, 0.5), (0.5, 1.0))
SHEAR_MODES = ("SHEAR_fs", "SHEAR_fn", "SHEAR_sf", "SHEAR_sn", "SHEAR_nf", "SHEAR_ns")


def cardiac_protocols(n_points: int = 20, max_stretch: float = 1.1, max_shear: float = 0.5) -> list:
    """Loading states of 5 biaxial protocols (Pff, Pnn measured) and the 6
    simple-shear modes (one component each), as (name, mode, params)."""
    blocks = []
    for rf, rn in BIAXIAL_RATIOS:
        e = np.linspace(0.0, max_stretch - 1.0, n_points + 1)[1:]
        params = np.column_stack([1.0 + rf * e, 1.0 + rn * e])
        blocks.append((f"BT_{rf:g}:{rn:g}", LoadingMode("ANISO_BT", ("Pff", "Pnn")), params))
    for kind in SHEAR_MODES:
        comp = "P" + kind.split("_")[1]
        g = np.linspace(0.0, max_shear, n_points + 1)[1:]
        blocks.append((kind, LoadingMode(kind, (comp,)), g[:, None]))
    return blocks


def cardiac_baseline_truth(frame=None) -> GroundTruth:
    """Published 4-term myocardium model (kPa) on the 32-term orthotropic
    library: [I2-3]^2, exp-quad I4f, exp-quad I4n and exp-quad I8fs."""
    from .library import make_orthotropic_library

    lib = make_orthotropic_library(frame)
    c = np.zeros(lib.n_terms)
    w = lib.default_w()
    for index, coef, wj in ((7, 5.162, None), (12, 0.081, 21.151), (20, 0.315, 4.371), (24, 0.486, 0.508)):
        j = index - 1
        c[j] = coef
        if wj is not None:
            w[j] = wj
    return GroundTruth("cardiac-baseline", lib, c, w)
