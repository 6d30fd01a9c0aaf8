"""Experiment reports and their canonical byte-stable serialization.

The JSON emitter is deliberately hand-rolled: keys are sorted at every
level and floats are printed with %.17g (with a forced decimal point),
so equal reports serialize to equal bytes and every float round-trips
exactly through any conforming JSON parser. Wall-clock time stays out of
the payload; it is a diagnostic, not a result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExperimentReport",
    "summarize",
    "histogram",
    "build_report",
    "canonical_json",
    "serialize_report",
    "histogram_csv",
]


@dataclass
class ExperimentReport:
    """Everything one experiment run produced.

    records holds one list per metric, one entry per repetition;
    summary and histograms are derived from records at build time and
    shipped so downstream tooling never recomputes them differently.
    """

    kind: str
    config: dict
    records: dict
    summary: dict
    histograms: dict
    rates: dict
    wall_clock: float = field(default=0.0, compare=False)

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
            "histograms": self.histograms,
            "rates": self.rates,
        }


def summarize(values) -> dict:
    """Count, mean, and the five-number summary of one metric."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty metric")
    q = np.quantile(arr, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "min": float(q[0]),
        "q25": float(q[1]),
        "median": float(q[2]),
        "q75": float(q[3]),
        "max": float(q[4]),
    }


def histogram(values, bins: int = 20) -> dict:
    """Equal-width half-open bins [left, right) whose counts sum to len(values).

    The top edge is pushed a hair beyond the max so the last bin captures
    it; a degenerate all-equal metric gets a single unit-width bin.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot histogram an empty metric")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        edges = np.linspace(lo, lo + 1.0, bins + 1)
    else:
        edges = np.linspace(lo, hi + (hi - lo) * 1e-9, bins + 1)
    idx = np.searchsorted(edges, arr, side="right") - 1
    idx = np.clip(idx, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def build_report(kind: str, config: dict, records: dict, rates: dict,
                 bins: int = 20, wall_clock: float = 0.0) -> ExperimentReport:
    records = {name: [float(v) for v in vals] for name, vals in records.items()}
    summary = {name: summarize(vals) for name, vals in records.items()}
    hists = {name: histogram(vals, bins) for name, vals in records.items()}
    return ExperimentReport(kind, dict(config), records, summary, hists, dict(rates),
                            wall_clock=wall_clock)


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _emit(obj, out: list) -> None:
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ValueError("report keys must be strings")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise ValueError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_json(payload) -> bytes:
    """Byte-stable JSON: sorted keys, %.17g floats, newline-terminated."""
    out: list = []
    _emit(payload, out)
    out.append("\n")
    return "".join(out).encode("utf-8")


def serialize_report(report: ExperimentReport) -> bytes:
    return canonical_json(report.payload())


def histogram_csv(report: ExperimentReport, metric: str) -> bytes:
    """One metric's histogram as bin_left,bin_right,count rows."""
    if metric not in report.histograms:
        raise ValueError(f"report has no metric {metric!r}")
    hist = report.histograms[metric]
    edges, counts = hist["edges"], hist["counts"]
    lines = ["bin_left,bin_right,count"]
    for i, c in enumerate(counts):
        lines.append(f"{_format_float(edges[i])},{_format_float(edges[i + 1])},{int(c)}")
    return ("\n".join(lines) + "\n").encode("utf-8")
