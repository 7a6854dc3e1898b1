import math

import numpy as np
import pytest

from stackboost.bench import (ACCURACY, MSE, BenchmarkConfig, BenchmarkRun, GbmConfig, Metric,
                              RfConfig, compute_metric, emit_report, markdown_table, read_report,
                              run_benchmark)
from stackboost.data import gen_blobs, gen_friedman1
from stackboost.stack import StackConfig

SMALL = BenchmarkConfig(gbm=GbmConfig(stages=10), rf=RfConfig(n_trees=5),
                        linear_stack=StackConfig(K=2, epochs=2, init_stages=3),
                        mlp_stack=StackConfig(K=2, epochs=2, init_stages=3, meta="mlp",
                                              hidden=(4,)))


def test_metrics():
    assert compute_metric(ACCURACY, [[0.9, 0.1], [0.2, 0.8]], [[1, 0], [1, 0]]).value == 0.5
    assert compute_metric(MSE, [[1.0], [3.0]], [[0.0], [0.0]]).value == 5.0
    with pytest.raises(ValueError):
        compute_metric(MSE, np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        Metric(ACCURACY, 1.5)


def test_run_statistics():
    r = BenchmarkRun("d", "gbm", MSE, {}, [1.0, 2.0, 3.0])
    assert r.mean == 2.0 and r.sd == 1.0
    assert BenchmarkRun("d", "gbm", MSE, {}, [4.0]).sd == 0.0
    assert math.isnan(BenchmarkRun("d", "gbm", MSE, {}).mean)


def test_small_benchmark_and_reports(tmp_path):
    ds = [gen_friedman1(40, seed=0), gen_blobs(30, 3, 3, seed=0)]
    runs = run_benchmark(ds, config=SMALL, repetitions=2, seed=3)
    assert len(runs) == 8 and all(r.status == "ok" for r in runs)
    assert {r.metric_kind for r in runs if r.dataset == "blobs"} == {ACCURACY}
    emit_report(runs, tmp_path / "a.csv", timing=False)
    rows = read_report(tmp_path / "a.csv")
    assert [r["family"] for r in rows[:4]] == ["linear_stack", "mlp_stack", "gbm", "rf"]
    assert float(rows[0]["mean"]) == runs[0].mean
    assert rows[0]["wall_ms"] == ""
    again = run_benchmark(ds, config=SMALL, repetitions=2, seed=3)
    emit_report(again, tmp_path / "b.csv", timing=False)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_parallel_matches_serial():
    ds = [gen_friedman1(30, seed=1)]
    a = run_benchmark(ds, ["gbm", "rf"], SMALL, 3, seed=2, n_jobs=1)
    b = run_benchmark(ds, ["gbm", "rf"], SMALL, 3, seed=2, n_jobs=2)
    assert [r.metrics for r in a] == [r.metrics for r in b]


def test_failures_are_recorded():
    ds = [gen_friedman1(12, seed=1)]
    cfg = BenchmarkConfig(rf=RfConfig(n_trees=2, features=50))
    (run,) = run_benchmark(ds, ["rf"], cfg, 2)
    assert run.status.startswith("failed")


def test_markdown_bolds_best():
    runs = [BenchmarkRun("d", "gbm", MSE, {}, [1.0, 1.2]),
            BenchmarkRun("d", "rf", MSE, {}, [2.0, 2.2]),
            BenchmarkRun("c", "gbm", ACCURACY, {}, [0.5, 0.6]),
            BenchmarkRun("c", "rf", ACCURACY, {}, [0.9, 1.0])]
    lines = markdown_table(runs).splitlines()
    assert lines[0] == "| Data set | GBM | Random Forest |"
    assert "**1.1" in lines[2] and "**" not in lines[2].split("|")[3]
    assert "**0.95" in lines[3]
