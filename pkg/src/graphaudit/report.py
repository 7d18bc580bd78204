"""Audit reports: JSON with per-seed entries and aggregates, CSV tables for plotting."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict

import numpy as np

from . import __version__

TIMING_KEY = "timings"


def _numeric(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def collect(runs):
    """``{label: {metric: [(seed, value), ...]}}`` over every numeric top-level field.

    The target summary is filed under the label ``target``.
    """
    table = defaultdict(lambda: defaultdict(list))
    for run in runs:
        for key, value in run.get("target", {}).items():
            if _numeric(value):
                table["target"][key].append((run["seed"], value))
        for entry in run.get("results", []):
            for key, value in entry.items():
                if key != "seed" and _numeric(value):
                    table[entry["label"]][key].append((run["seed"], value))
    return table


def aggregate(runs):
    """Mean and population standard deviation of every metric across seeds."""
    out = {}
    for label, metrics in sorted(collect(runs).items()):
        out[label] = {}
        for metric, values in sorted(metrics.items()):
            arr = np.asarray([v for _, v in values], dtype=np.float64)
            out[label][metric] = {"mean": float(arr.mean()), "std": float(arr.std()), "n": int(arr.size)}
    return out


def build_report(cfg, runs):
    runs = sorted(runs, key=lambda r: r["seed"])
    timings = {str(r["seed"]): r.get(TIMING_KEY, {}) for r in runs}
    body = [{k: v for k, v in r.items() if k != TIMING_KEY} for r in runs]
    report = {
        "version": __version__,
        "name": cfg.experiment.name,
        "config": cfg.to_mapping(),
        "runs": body,
        "aggregate": aggregate(body),
        "errors": [dict(e, seed=r["seed"]) for r in body for e in r.get("errors", [])],
        TIMING_KEY: timings,
    }
    return _clean(report)


def dumps(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report, path):
    with open(path, "w") as fh:
        fh.write(dumps(report))


def read_report(path):
    with open(path) as fh:
        return json.load(fh)


def strip_timings(report):
    return {k: v for k, v in report.items() if k != TIMING_KEY}


def merge_runs(reports):
    """All per-seed runs from several reports; a seed may appear only once."""
    runs, seen = [], {}
    for i, rep in enumerate(reports):
        for run in rep.get("runs", []):
            key = (rep.get("name"), run["seed"])
            if key in seen:
                raise ValueError(f"seed {run['seed']} of {key[0]!r} appears in reports {seen[key]} and {i}")
            seen[key] = i
            runs.append(run)
    return runs


AGGREGATE_COLUMNS = ["label", "metric", "n", "mean", "std"]


def aggregate_rows(runs, extra=None):
    rows = []
    for label, metrics in aggregate(runs).items():
        for metric, stats in metrics.items():
            row = dict(extra or {})
            row.update({"label": label, "metric": metric, **stats})
            rows.append(row)
    return rows


def per_seed_rows(runs):
    rows = []
    for label, metrics in sorted(collect(runs).items()):
        for metric, pairs in sorted(metrics.items()):
            for seed, value in pairs:
                rows.append({"label": label, "metric": metric, "seed": seed, "value": value})
    return rows


def write_csv(rows, path, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
