"""Repeated random-split benchmarks over the four model families."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .baseline import rf_train
from .data import Dataset, make_cv_plans
from .gbm import LearnerConfig, gbm_train
from .loss import SOFTMAX_CE, SQUARED, Loss
from .stack import StackConfig, stack_train

log = logging.getLogger(__name__)

LINEAR_STACK = "linear_stack"
MLP_STACK = "mlp_stack"
PLAIN_GBM = "gbm"
RANDOM_FOREST = "rf"
FAMILIES = (LINEAR_STACK, MLP_STACK, PLAIN_GBM, RANDOM_FOREST)
FAMILY_TITLES = {LINEAR_STACK: "Linear GBM", MLP_STACK: "NN + GBM", PLAIN_GBM: "GBM",
                 RANDOM_FOREST: "Random Forest"}

ACCURACY = "accuracy"
MSE = "mse"
REPORT_COLUMNS = ("dataset", "family", "metric_kind", "mean", "sd", "repetitions", "seed",
                  "wall_ms", "status")


@dataclass(frozen=True)
class GbmConfig:
    stages: int = 100
    depth: int = 3
    min_leaf: int = 1
    learning_rate: float = 0.1
    init: str | float = "mean"
    base: str = "tree"
    inner_stages: int = 3
    inner_depth: int = 2
    loss: str | None = None

    def learner(self) -> LearnerConfig:
        return LearnerConfig(self.base, self.depth, self.min_leaf, self.inner_stages,
                             self.inner_depth)


@dataclass(frozen=True)
class RfConfig:
    n_trees: int = 100
    max_depth: int | None = None
    features: int | None = None
    min_leaf: int = 1


@dataclass(frozen=True)
class BenchmarkConfig:
    gbm: GbmConfig = GbmConfig()
    linear_stack: StackConfig = StackConfig(meta="linear")
    mlp_stack: StackConfig = StackConfig(meta="mlp")
    rf: RfConfig = RfConfig()
    train_fraction: float = 0.75

    def for_family(self, family: str):
        return {LINEAR_STACK: self.linear_stack, MLP_STACK: self.mlp_stack, PLAIN_GBM: self.gbm,
                RANDOM_FOREST: self.rf}[family]


@dataclass
class Metric:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind == ACCURACY and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"accuracy out of range: {self.value}")
        if self.kind == MSE and self.value < 0:
            raise ValueError(f"negative MSE: {self.value}")


@dataclass
class BenchmarkRun:
    dataset: str
    family: str
    metric_kind: str
    config: dict
    metrics: list[float] = field(default_factory=list)
    repetitions: int = 0
    seed: int = 0
    wall_ms: float = 0.0
    status: str = "ok"

    @property
    def mean(self) -> float:
        return float(np.mean(self.metrics)) if self.metrics else math.nan

    @property
    def sd(self) -> float:
        """Sample standard deviation over repetitions (0 for a single repetition)."""
        if not self.metrics:
            return math.nan
        return float(np.std(self.metrics, ddof=1)) if len(self.metrics) > 1 else 0.0


def compute_metric(kind: str, predictions, targets) -> Metric:
    """Accuracy as the argmax hit rate; MSE as the mean squared row-error norm."""
    p = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if p.shape[0] == 0 or y.shape[0] == 0:
        raise ValueError("empty test set")
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {y.shape}")
    if kind == ACCURACY:
        return Metric(kind, float(np.mean(np.argmax(p, axis=1) == np.argmax(y, axis=1))))
    if kind == MSE:
        return Metric(kind, float(np.mean(np.sum((y - p) ** 2, axis=1))))
    raise ValueError(f"unknown metric {kind!r}")


def train_family(family: str, dataset: Dataset, config: BenchmarkConfig, seed: int = 0):
    """Fit one model of ``family``; the returned object has ``predict(X)``."""
    cfg = config.for_family(family)
    if family == PLAIN_GBM:
        kind = cfg.loss or (SOFTMAX_CE if dataset.is_classification else SQUARED)
        return gbm_train(dataset, Loss(kind, dataset.n_outputs), cfg.stages, cfg.learner(),
                         cfg.learning_rate, cfg.init)
    if family == RANDOM_FOREST:
        return rf_train(dataset, cfg.n_trees, cfg.max_depth, cfg.features, seed,
                        min_samples_leaf=cfg.min_leaf)
    if family in (LINEAR_STACK, MLP_STACK):
        return stack_train(dataset, replace(cfg, seed=seed))
    raise ValueError(f"unknown model family {family!r}")


def _one_repetition(args) -> float:
    dataset, family, config, plan, kind = args
    train, test = dataset.subset(plan.train_indices), dataset.subset(plan.test_indices)
    model = train_family(family, train, config, seed=int(plan.seed * 1_000_003 + plan.repetition))
    return compute_metric(kind, model.predict(test.features), test.targets).value


def run_benchmark(datasets: list[Dataset], families=FAMILIES,
                  config: BenchmarkConfig = BenchmarkConfig(), repetitions: int = 20,
                  seed: int = 0, n_jobs: int = 1) -> list[BenchmarkRun]:
    """Train and score every family on every dataset over shared random splits.

    A failing (dataset, family) pair is recorded with ``status="failed: ..."``
    and the suite carries on.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    runs = []
    pool = ProcessPoolExecutor(n_jobs) if n_jobs > 1 else None
    try:
        for ds in datasets:
            plans = make_cv_plans(ds, repetitions, config.train_fraction, seed)
            kind = ACCURACY if ds.is_classification else MSE
            for family in families:
                run = BenchmarkRun(ds.name, family, kind, _snapshot(config.for_family(family)),
                                   repetitions=repetitions, seed=seed)
                t0 = time.perf_counter()
                jobs = [(ds, family, config, p, kind) for p in plans]
                try:
                    # map() keeps repetition order regardless of completion order
                    values = pool.map(_one_repetition, jobs) if pool else map(_one_repetition, jobs)
                    run.metrics = [float(v) for v in values]
                except Exception as exc:  # noqa: BLE001 - recorded per run
                    run.status = f"failed: {type(exc).__name__}: {exc}"
                    log.warning("%s/%s failed: %s", ds.name, family, exc)
                run.wall_ms = 1000.0 * (time.perf_counter() - t0)
                log.info("%s/%s: %s %.4g (sd %.3g) over %d reps in %.0f ms", ds.name, family,
                         kind, run.mean, run.sd, len(run.metrics), run.wall_ms)
                runs.append(run)
    finally:
        if pool:
            pool.shutdown()
    return runs


def _snapshot(cfg) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()}


def _best(runs: list[BenchmarkRun]) -> BenchmarkRun | None:
    ok = [r for r in runs if r.status == "ok" and r.metrics]
    if not ok:
        return None
    pick = max if ok[0].metric_kind == ACCURACY else min
    return pick(ok, key=lambda r: r.mean)


def emit_report(runs: list[BenchmarkRun], path, fmt: str = "csv", timing: bool = True) -> Path:
    """Write a CSV (one row per run) or a markdown table (one row per dataset,
    best family in bold).  ``timing=False`` blanks ``wall_ms`` so reports from
    the same seed are byte-identical."""
    if not runs:
        raise ValueError("no benchmark runs to report")
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for r in runs:
                w.writerow([r.dataset, r.family, r.metric_kind, "%.17g" % r.mean, "%.17g" % r.sd,
                            r.repetitions, r.seed, "%.0f" % r.wall_ms if timing else "", r.status])
    elif fmt == "markdown":
        path.write_text(markdown_table(runs), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def markdown_table(runs: list[BenchmarkRun]) -> str:
    families = list(dict.fromkeys(r.family for r in runs))
    datasets = list(dict.fromkeys(r.dataset for r in runs))
    head = ["Data set"] + [FAMILY_TITLES.get(f, f) for f in families]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for ds in datasets:
        row_runs = [r for r in runs if r.dataset == ds]
        best = _best(row_runs)
        cells = [ds]
        for f in families:
            r = next((x for x in row_runs if x.family == f), None)
            if r is None:
                cells.append("")
            elif r.status != "ok":
                cells.append("failed")
            else:
                text = f"{r.mean:.3g} ± {r.sd:.2g}"
                cells.append(f"**{text}**" if r is best else text)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def read_report(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
