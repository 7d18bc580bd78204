import csv
import json

import numpy as np
import pytest

from graphaudit.config import ExperimentConfig
from graphaudit.report import (aggregate, aggregate_rows, build_report, dumps, merge_runs, per_seed_rows,
                               read_report, strip_timings, write_csv, write_report)


def fake_run(seed, acc, auc=float("nan")):
    return {"seed": seed, "target": {"model": "gcn", "train_acc": 1.0, "test_acc": acc},
            "results": [{"label": "membership.confidence", "accuracy": acc, "auc": auc, "attack": "confidence",
                         "params": {"threshold": "sweep"}, "seed": 123}],
            "errors": [], "timings": {"train_target": 0.1 * seed}}


RUNS = [fake_run(0, 0.6), fake_run(1, 0.8), fake_run(2, 0.7)]


def test_aggregates_are_recomputable_from_entries():
    rep = build_report(ExperimentConfig(), RUNS)
    for label, metrics in rep["aggregate"].items():
        for metric, stats in metrics.items():
            if label == "target":
                values = [r["target"][metric] for r in rep["runs"]]
            else:
                values = [e[metric] for r in rep["runs"] for e in r["results"]
                          if e["label"] == label and e[metric] is not None]
            assert stats["n"] == len(values)
            assert stats["mean"] == pytest.approx(np.mean(values), abs=1e-12)
            assert stats["std"] == pytest.approx(np.std(values), abs=1e-12)


def test_nan_becomes_null_and_is_not_aggregated():
    rep = build_report(ExperimentConfig(), RUNS)
    assert rep["runs"][0]["results"][0]["auc"] is None
    assert "auc" not in rep["aggregate"]["membership.confidence"]
    json.loads(dumps(rep))


def test_timings_are_separate(tmp_path):
    rep = build_report(ExperimentConfig(), RUNS)
    assert all("timings" not in r for r in rep["runs"])
    other = build_report(ExperimentConfig(), [dict(r, timings={"train_target": 9.0}) for r in RUNS])
    assert strip_timings(rep) == strip_timings(other)
    write_report(rep, tmp_path / "r.json")
    assert read_report(tmp_path / "r.json") == rep


def test_merge_rejects_duplicate_seeds():
    a = build_report(ExperimentConfig(), RUNS[:2])
    b = build_report(ExperimentConfig(), RUNS[2:])
    assert [r["seed"] for r in merge_runs([a, b])] == [0, 1, 2]
    with pytest.raises(ValueError, match="seed 0"):
        merge_runs([a, a])


def test_csv_tables(tmp_path):
    rows = aggregate_rows(RUNS, {"sweep": "layers"})
    write_csv(rows, tmp_path / "agg.csv", ["sweep", "label", "metric", "n", "mean", "std"])
    with open(tmp_path / "agg.csv") as fh:
        table = list(csv.DictReader(fh))
    row = next(r for r in table if r["label"] == "membership.confidence" and r["metric"] == "accuracy")
    assert float(row["mean"]) == pytest.approx(0.7) and row["n"] == "3" and row["sweep"] == "layers"
    long = per_seed_rows(RUNS)
    assert sum(1 for r in long if r["metric"] == "accuracy") == 3
    assert aggregate(RUNS)["target"]["train_acc"]["std"] == 0.0
