"""
Command-line interface.

    hyperdisco generate  --config gen.json --out data.csv
    hyperdisco discover  --config run.json --out results/ [--cells lasso:bic,omp:cv]
    hyperdisco benchmark [--config scenarios.json] --out bench/ [--seed 0]
    hyperdisco evaluate  --model model.json --data data.csv
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import save_csv
from .errors import ConfigurationError, DiscoveryError
from .pipeline import RunConfig, benchmark, default_scenarios, load_dataset, run_discovery
from .refine import DiscoveredModel, evaluate_metrics
from .selection import CRITERIA
from .solvers import ALGORITHMS


def parse_cells(text: str):
    cells = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        alg, sep, crit = item.partition(":")
        if not sep:
            raise ConfigurationError(f"cell {item!r} is not of the form algorithm:criterion")
        alg, crit = alg.strip().upper(), crit.strip().upper()
        if alg not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {alg!r}")
        if crit not in CRITERIA:
            raise ConfigurationError(f"unknown selection criterion {crit!r}")
        cells.append((alg, crit))
    return cells


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigurationError("--config is required")
    path = Path(args.config)
    if not path.exists():
        raise ConfigurationError(f"config file {path} does not exist")
    raw = json.loads(path.read_text())
    if args.seed is not None:
        raw["seed"] = args.seed
    return RunConfig.from_dict(raw, base_dir=path.parent)


def cmd_generate(args) -> int:
    config = _load_config(args)
    if "synthetic" not in config.dataset:
        raise ConfigurationError("generate needs a synthetic dataset spec")
    loaded = load_dataset(config)
    out = Path(args.out or "synthetic.csv")
    save_csv(loaded.data, out)
    if args.clean_out:
        save_csv(loaded.clean, Path(args.clean_out))
    print(f"wrote {loaded.data.n_obs} observations to {out}")
    return 0


def cmd_discover(args) -> int:
    config = _load_config(args)
    cells = parse_cells(args.cells) if args.cells else None
    results = run_discovery(config, args.out, cells)
    failed = 0
    for cell in results:
        if cell.ok:
            m = cell.model.metrics
            print(f"{cell.algorithm:5s} {cell.criterion:3s}  n_active={cell.model.n_active}  "
                  f"R2={m['R2']:.4f}  RMSE={m['RMSE']:.4g} {m['units']}  W = {cell.model.describe()}")
        else:
            failed += 1
            print(f"{cell.algorithm:5s} {cell.criterion:3s}  FAILED: {cell.error}", file=sys.stderr)
    return 1 if failed else 0


def cmd_benchmark(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file {path} does not exist")
        raw = json.loads(path.read_text())
        scenarios = raw["scenarios"] if isinstance(raw, dict) else raw
    else:
        scenarios = default_scenarios(seed)
    rows = benchmark(scenarios, args.out or "benchmark", seed)
    for row in rows:
        print(f"{row['scenario']:14s} {row.get('algorithm') or '-':5s} {row.get('criterion') or '-':3s} "
              f"{row['status']:6s} recovered={row.get('ground_truth_recovered')} n_active={row.get('n_active')}")
    return 1 if any(r["status"] != "ok" for r in rows) else 0


def cmd_evaluate(args) -> int:
    from .data import load_csv

    if not args.model or not args.data:
        raise ConfigurationError("evaluate needs --model and --data")
    model = DiscoveredModel.load(args.model)
    data = load_csv(args.data)
    metrics = evaluate_metrics(model, data)
    text = json.dumps(metrics, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperdisco", description="Sparse hyperelastic model discovery")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV from a truth spec")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--clean-out", help="also write the noise-free data")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("discover", help="run (algorithm x criterion) cells from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--cells", help="comma-separated algorithm:criterion pairs, e.g. lasso:bic,omp:cv")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("benchmark", help="sweep synthetic scenarios")
    p.add_argument("--config", help="JSON list of scenarios (default: 4 truths x 3 noise levels)")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("evaluate", help="metrics of a saved model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DiscoveryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
