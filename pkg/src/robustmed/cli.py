"""Command-line front end.

One-shot estimators (median, mean) read headerless CSV, one point per
row; experiment subcommands take a flat JSON config mirroring
ExperimentConfig, with flags overriding file values, and write the
canonical JSON report plus optional per-metric histogram CSVs. Exit
codes: 0 success, 2 argument or configuration error, 3 numeric failure.
The default worker count comes from ROBUSTMED_WORKERS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace

import numpy as np

from .aggregate import AggregationPlan, ball_radius, robust_mean, robust_trace
from .experiments import KINDS, ExperimentConfig, default_config, run_experiment
from .median import MedianOptions, PointSet, geometric_median
from .reporting import canonical_json, histogram_csv, serialize_report

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}

# flags every experiment subcommand shares; per-kind extras listed below
_KIND_FLAGS = {
    "boost": ("k", "alpha", "p", "eps", "tau", "shape", "dim"),
    "coverage": ("law", "dim", "n", "delta", "alpha", "p", "k", "n_outliers"),
    "pca": ("law", "dim", "n", "n_outliers", "outlier_half_width", "k", "m", "nu"),
    "lasso": ("dim", "n", "sparsity", "k", "cv_folds", "noise", "penalty", "t"),
    "matreg": ("dim", "n", "rank", "t", "radius_mult", "penalty_scale", "matrix_kind",
               "spike_prob"),
}

_FLAG_TYPES = {
    "k": int, "dim": int, "n": int, "n_outliers": int, "m": int, "sparsity": int,
    "cv_folds": int, "rank": int,
    "alpha": float, "p": float, "eps": float, "tau": float, "delta": float, "nu": float,
    "outlier_half_width": float, "penalty": float, "t": float, "radius_mult": float,
    "penalty_scale": float, "spike_prob": float,
    "shape": str, "law": str, "noise": str, "matrix_kind": str,
}


def _default_workers() -> int:
    raw = os.environ.get("ROBUSTMED_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"ROBUSTMED_WORKERS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError("ROBUSTMED_WORKERS must be at least 1")
    return value


def _read_points(path: str) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ValueError(f"no data in {path}")
    return data


def _write_bytes(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _median_options(args) -> MedianOptions:
    return MedianOptions(tol=args.tol, max_iter=args.max_iter, relaxation=args.relax)


def _cmd_median(args) -> int:
    points = _read_points(args.points)
    weights = None
    if args.weights is not None:
        weights = np.loadtxt(args.weights, delimiter=",").reshape(-1)
    res = geometric_median(PointSet(points, weights), _median_options(args))
    payload = {
        "point": [float(v) for v in res.point],
        "weights": [float(v) for v in res.weights],
        "iterations": res.iterations,
        "converged": res.converged,
        "objective": res.objective,
    }
    _write_bytes(args.out, canonical_json(payload))
    return EXIT_OK


def _cmd_mean(args) -> int:
    data = _read_points(args.data)
    plan = AggregationPlan(alpha=args.alpha, p=args.p, delta=args.delta, k=args.k)
    res = robust_mean(data, plan)
    n = data.shape[0]
    k = plan.resolve_k(n)
    trace_hat = robust_trace(data, plan)
    payload = {
        "center": [float(v) for v in res.point],
        "weights": [float(v) for v in res.weights],
        "k": k,
        "discarded": n - k * (n // k),
        "n": n,
        "delta": args.delta,
        "trace_hat": trace_hat,
        "ball_radius": ball_radius(trace_hat, n, args.delta),
        "iterations": res.iterations,
        "converged": res.converged,
    }
    _write_bytes(args.out, canonical_json(payload))
    return EXIT_OK


def _load_config(kind: str, path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unknown = sorted(set(data) - _CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    file_kind = data.pop("kind", kind)
    if file_kind != kind:
        raise ValueError(f"config kind {file_kind!r} does not match subcommand {kind!r}")
    return data


def _cmd_experiment(args) -> int:
    kind = args.kind
    if getattr(args, "paper_defaults", False) and getattr(args, "config", None):
        raise ValueError("--paper-defaults and --config are mutually exclusive")
    cfg = default_config(kind)
    if getattr(args, "config", None):
        cfg = replace(cfg, **_load_config(kind, args.config))
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    for name in _KIND_FLAGS[kind]:
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = replace(cfg, **overrides)
    report = run_experiment(cfg, workers=args.workers)
    print(f"# {kind}: reps={report.config['reps']} wall_clock={report.wall_clock:.3f}s",
          file=sys.stderr)
    _write_bytes(args.out, serialize_report(report))
    if args.hist is not None:
        for metric in sorted(report.histograms):
            _write_bytes(f"{args.hist}_{metric}.csv", histogram_csv(report, metric))
    return EXIT_OK


def _add_common_experiment_flags(sub, kind: str) -> None:
    sub.add_argument("--config", help="flat JSON config; flags override its values")
    if kind in ("pca", "lasso"):
        sub.add_argument("--paper-defaults", action="store_true",
                         help="pin the study-scale defaults (they are the defaults)")
    sub.add_argument("--reps", type=int, default=None, help="repetitions")
    if kind == "boost":
        sub.add_argument("--trials", dest="reps", type=int, default=None,
                         help="Monte Carlo trials (alias of --reps)")
    sub.add_argument("--seed", type=int, default=None, help="RNG seed (default 42)")
    sub.add_argument("--workers", type=int, default=None,
                     help="worker processes (default from ROBUSTMED_WORKERS, else 1)")
    sub.add_argument("--out", help="report path (default stdout)")
    sub.add_argument("--hist", metavar="STEM",
                     help="write <STEM>_<metric>.csv histograms")
    for name in _KIND_FLAGS[kind]:
        flag = "--" + name.replace("_", "-")
        sub.add_argument(flag, dest=name, type=_FLAG_TYPES[name], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustmed",
        description="Median-aggregated robust estimators and their simulation studies.")
    subs = parser.add_subparsers(dest="command", required=True)

    median = subs.add_parser("median", help="geometric median of CSV points")
    median.add_argument("--points", required=True, help="headerless CSV, one point per row")
    median.add_argument("--weights", help="optional CSV of weights, one per point")
    median.add_argument("--tol", type=float, default=1e-10)
    median.add_argument("--max-iter", dest="max_iter", type=int, default=10_000)
    median.add_argument("--relax", type=float, default=1.0)
    median.add_argument("--out", help="output path (default stdout)")
    median.set_defaults(func=_cmd_median)

    mean = subs.add_parser("mean", help="median-of-means with a data-driven ball")
    mean.add_argument("--data", required=True, help="headerless CSV, one sample per row")
    mean.add_argument("--delta", type=float, default=0.05)
    mean.add_argument("--k", type=int, default=None, help="blocks (default: from delta)")
    mean.add_argument("--alpha", type=float, default=7.0 / 18.0)
    mean.add_argument("--p", type=float, default=0.1)
    mean.add_argument("--out", help="output path (default stdout)")
    mean.set_defaults(func=_cmd_mean)

    for kind in KINDS:
        sub = subs.add_parser(kind, help=f"run the {kind} experiment")
        _add_common_experiment_flags(sub, kind)
        sub.set_defaults(func=_cmd_experiment, kind=kind)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = _default_workers()
        if getattr(args, "seed", None) is None and hasattr(args, "seed"):
            args.seed = 42
        return args.func(args)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
