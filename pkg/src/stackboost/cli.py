"""Command-line front end: ``train``, ``predict``, ``benchmark`` and ``gradcheck``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training error,
4 gradient check outside tolerance.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import BenchmarkConfig, emit_report, markdown_table, run_benchmark, train_family
from .config import ConfigError, builtin_suite, load_benchmark_config, load_run_config
from .data import DataError
from .gradcheck import run_gradcheck
from .serialize import FormatError, ModelFile, load_model, save_model

EXIT_CONFIG, EXIT_DATA, EXIT_TRAIN, EXIT_GRADCHECK = 1, 2, 3, 4



class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _setup_logging() -> None:
    level = os.environ.get("STACKBOOST_LOG", "warn").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING,
              "warning": logging.WARNING}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _training_loss(model, dataset) -> float:
    history = getattr(model, "history", None)
    if history:
        return float(history[-1])
    return float(np.mean(np.sum((model.predict(dataset.features) - dataset.targets) ** 2, axis=1)))


def cmd_train(config_path, seed: int | None = None, out=None) -> Path:
    out = out or sys.stdout
    cfg = load_run_config(config_path)
    if seed is not None:
        cfg.seed = seed
    if not cfg.model_path:
        raise CliError("[output] needs a 'model' path", EXIT_CONFIG)
    try:
        ds = cfg.dataset()
    except (DataError, OSError) as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    family = cfg.family
    t0 = time.perf_counter()
    try:
        model = train_family(family, ds, BenchmarkConfig(**{family: cfg.model}), cfg.seed)
    except ValueError as exc:
        raise CliError(f"training failed: {exc}", EXIT_TRAIN) from None
    wall = 1000 * (time.perf_counter() - t0)
    path = Path(cfg.model_path)
    if not path.is_absolute():
        path = cfg.base_dir / path
    names = ds.feature_names or tuple(f"x{j + 1}" for j in range(ds.n_features))
    save_model(model, path, ds.task, names, ds.class_labels)
    print(f"family={family} dataset={ds.name or 'data'} rows={ds.n_rows} "
          f"train_loss={_training_loss(model, ds):.10g} wall_ms={wall:.0f} model={path}", file=out)
    return path


def _select_columns(header: list[str], names: tuple | None, m: int) -> list[int]:
    if names and all(n in header for n in names):
        return [header.index(n) for n in names]
    if len(header) == m:
        return list(range(m))
    raise CliError(f"feature count mismatch: model expects m={m} features, input has "
                   f"{len(header)} columns", EXIT_DATA)


def _n_features(mf: ModelFile) -> int:
    if mf.feature_names:
        return len(mf.feature_names)
    raise CliError("model file carries no feature list", EXIT_DATA)


def cmd_predict(model_path, input_path, output_path) -> int:
    try:
        mf = load_model(model_path)
    except (OSError, FormatError) as exc:
        raise CliError(f"cannot load model: {exc}", EXIT_DATA) from None
    m = _n_features(mf)
    try:
        with open(input_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            rows = [r for r in reader if r]
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}", EXIT_DATA) from None
    cols = _select_columns(header, mf.feature_names, m)
    X = np.empty((len(rows), m))
    for i, r in enumerate(rows):
        try:
            X[i] = [float(r[j]) for j in cols]
        except (ValueError, IndexError):
            raise CliError(f"row {i + 2}: cannot parse features", EXIT_DATA) from None
    if not np.all(np.isfinite(X)):
        raise CliError("input contains non-finite values", EXIT_DATA)
    T = mf.model.n_outputs if hasattr(mf.model, "n_outputs") else mf.model.trees[0].n_outputs
    preds = mf.model.predict(X) if len(rows) else np.empty((0, T))
    classify = mf.task == "classification"
    head = ["pred"] if T == 1 else [f"pred_{c + 1}" for c in range(T)]
    if classify:
        head.append("class")
    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        for p in preds:
            row = ["%.17g" % v for v in p]
            if classify:
                c = int(np.argmax(p))
                row.append(mf.class_labels[c] if mf.class_labels else str(c))
            w.writerow(row)
    return len(rows)


def cmd_benchmark(config_path=None, suite: str | None = None, seed: int | None = None,
                  repetitions: int | None = None, threads: int | None = None,
                  report: str | None = None, fmt: str | None = None, timing: bool = True,
                  out=None) -> Path:
    out = out or sys.stdout
    if (config_path is None) == (suite is None):
        raise CliError("benchmark needs exactly one of --config or --suite", EXIT_CONFIG)
    spec = load_benchmark_config(config_path) if config_path else builtin_suite(suite, seed or 0)
    if seed is not None:
        spec = replace(spec, seed=seed)
    if repetitions is not None:
        spec = replace(spec, repetitions=repetitions)
    n_jobs = threads or spec.threads or os.cpu_count() or 1
    fmt = fmt or spec.report_format
    path = Path(report or spec.report_path or f"benchmark.{'md' if fmt == 'markdown' else 'csv'}")
    runs = run_benchmark(spec.datasets, spec.families, spec.config, spec.repetitions, spec.seed,
                         n_jobs)
    try:
        emit_report(runs, path, fmt, timing)
    except OSError as exc:
        raise CliError(f"cannot write report: {exc}", EXIT_DATA) from None
    print(markdown_table(runs), file=out, end="")
    print(f"report written to {path}", file=out)
    return path


def cmd_gradcheck(seed: int = 0, trials: int = 100, perturb: float = 0.0, out=None) -> int:
    out = out or sys.stdout
    t0 = time.perf_counter()
    report = run_gradcheck(seed, trials, perturb)
    for suite, err in report.max_error.items():
        status = "ok" if err <= report.tolerance else "FAIL"
        print(f"{suite:16s} max_rel_err={err:.3e} {status}", file=out)
    print(f"{trials} trials, tolerance {report.tolerance:.0e}, "
          f"{time.perf_counter() - t0:.2f} s: {'PASS' if report.passed else 'FAIL'}", file=out)
    return 0 if report.passed else EXIT_GRADCHECK


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override the configured seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker cap for benchmarks")
    common.add_argument("--config", default=argparse.SUPPRESS, help="run configuration file")
    p = argparse.ArgumentParser(prog="stackboost", description=__doc__.splitlines()[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", parents=[common],
                       help="train one model and write a model file")
    t.add_argument("config_path", nargs="?")

    pr = sub.add_parser("predict", parents=[common],
                        help="score a CSV file with a saved model")
    pr.add_argument("model")
    pr.add_argument("input")
    pr.add_argument("output")

    b = sub.add_parser("benchmark", parents=[common], help="repeated random-split comparison of model families")
    b.add_argument("config_path", nargs="?")
    b.add_argument("--suite", choices=["regression-small", "classification-small"])
    b.add_argument("--repetitions", type=int)
    b.add_argument("--report")
    b.add_argument("--format", choices=["csv", "markdown"])
    b.add_argument("--no-timing", action="store_true",
                   help="leave wall_ms blank so reports are byte-reproducible")

    g = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of all analytic gradients")
    g.add_argument("--trials", type=int, default=100)
    g.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    for flag in ("seed", "threads", "config"):
        if not hasattr(args, flag):
            setattr(args, flag, None)
    try:
        if args.command == "train":
            path = args.config_path or args.config
            if not path:
                raise CliError("train needs a config file", EXIT_CONFIG)
            cmd_train(path, args.seed)
        elif args.command == "predict":
            cmd_predict(args.model, args.input, args.output)
        elif args.command == "benchmark":
            cmd_benchmark(args.config_path or args.config, args.suite, args.seed,
                          args.repetitions, args.threads, args.report, args.format,
                          not args.no_timing)
        else:
            if args.trials < 1:
                raise CliError("--trials must be >= 1", EXIT_CONFIG)
            return cmd_gradcheck(args.seed or 0, args.trials, args.perturb)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
