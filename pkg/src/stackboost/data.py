"""Datasets, CSV ingestion, synthetic generators and repeated train/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

REGRESSION = "regression"
CLASSIFICATION = "classification"


class DataError(ValueError):
    """Raised when a dataset cannot be built or parsed."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``features`` (N x m) paired with target matrix ``targets`` (N x T).

    For classification the targets are one-hot rows over ``n_classes`` columns
    and ``class_labels`` keeps the original label of each column.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] | None = None
    task: str = REGRESSION
    class_labels: tuple[str, ...] | None = None
    name: str = ""

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if x.ndim != 2 or y.ndim != 2:
            raise DataError("features and targets must be matrices")
        if x.shape[0] < 1 or x.shape[1] < 1 or y.shape[1] < 1:
            raise DataError(f"empty dataset: features {x.shape}, targets {y.shape}")
        if x.shape[0] != y.shape[0]:
            raise DataError(f"row count mismatch: {x.shape[0]} features vs {y.shape[0]} targets")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise DataError(f"unknown task {self.task!r}")
        if self.task == CLASSIFICATION:
            if not (np.all((y == 0) | (y == 1)) and np.all(y.sum(axis=1) == 1)):
                raise DataError("classification targets must be one-hot rows")
        if self.feature_names is not None and len(self.feature_names) != x.shape[1]:
            raise DataError("feature_names length does not match feature count")
        object.__setattr__(self, "features", _frozen(x))
        object.__setattr__(self, "targets", _frozen(y))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[1]

    @property
    def is_classification(self) -> bool:
        return self.task == CLASSIFICATION

    @property
    def labels(self) -> np.ndarray:
        """Class index per row (classification only)."""
        return np.argmax(self.targets, axis=1)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.features[rows], self.targets[rows], self.feature_names,
                       self.task, self.class_labels, self.name)


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    repetition: int
    seed: int


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.intp)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _resolve_columns(header: list[str], spec) -> list[int]:
    if spec is None:
        return [len(header) - 1]
    if isinstance(spec, (str, int)):
        spec = [spec]
    cols = []
    for s in spec:
        if isinstance(s, int) or (isinstance(s, str) and s.lstrip("-").isdigit() and s not in header):
            i = int(s)
            if i < 0:
                i += len(header)
            if not 0 <= i < len(header):
                raise DataError(f"target column index {s} out of range")
            cols.append(i)
        elif s in header:
            cols.append(header.index(s))
        else:
            raise DataError(f"target column {s!r} not found in header")
    return cols


def load_csv(path, target_columns=None, task: str = REGRESSION) -> Dataset:
    """Read a headed, comma-separated file into a :class:`Dataset`.

    ``target_columns`` takes column names or indices (default: last column).
    For classification exactly one target column is allowed; its labels are
    mapped to class indices in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        rows = [r for r in reader if r]
    if not rows:
        raise DataError(f"{path}: empty dataset")
    tcols = _resolve_columns(header, target_columns)
    if task == CLASSIFICATION and len(tcols) != 1:
        raise DataError("classification expects a single label column")
    fcols = [j for j in range(len(header)) if j not in tcols]
    if not fcols:
        raise DataError("no feature columns left")

    x = np.empty((len(rows), len(fcols)))
    y_raw = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for k, j in enumerate(fcols):
            x[i - 2, k] = _parse_cell(row[j], path, i, header[j])
        if task == CLASSIFICATION:
            label = row[tcols[0]].strip()
            if not label:
                raise DataError(f"{path}: row {i}, column {header[tcols[0]]!r}: missing label")
            y_raw.append(label)
        else:
            y_raw.append([_parse_cell(row[j], path, i, header[j]) for j in tcols])

    names = tuple(header[j] for j in fcols)
    if task == CLASSIFICATION:
        order: dict[str, int] = {}
        for label in y_raw:
            order.setdefault(label, len(order))
        y = one_hot([order[label] for label in y_raw], len(order))
        return Dataset(x, y, names, CLASSIFICATION, tuple(order), path.stem)
    return Dataset(x, np.array(y_raw), names, REGRESSION, None, path.stem)


def _parse_cell(text: str, path, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"{path}: row {row}, column {column!r}: cannot parse {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{path}: row {row}, column {column!r}: non-finite value {text!r}")
    return v


def write_csv(dataset: Dataset, path) -> None:
    """Write ``dataset`` so that :func:`load_csv` reproduces it exactly."""
    names = list(dataset.feature_names or [f"x{j + 1}" for j in range(dataset.n_features)])
    if dataset.is_classification:
        labels = dataset.class_labels or tuple(str(c) for c in range(dataset.n_outputs))
        tnames = ["label"]
        tvals = [[labels[c]] for c in dataset.labels]
    else:
        tnames = ["y"] if dataset.n_outputs == 1 else [f"y{c + 1}" for c in range(dataset.n_outputs)]
        tvals = [[repr(float(v)) for v in row] for row in dataset.targets]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + tnames)
        for xrow, trow in zip(dataset.features, tvals):
            w.writerow([repr(float(v)) for v in xrow] + trow)


def load_longley() -> Dataset:
    """Longley's economic data (16 rows), ``Employed`` as target and 6 predictors.

    The bundled table counts 7 columns; one of them is the response, so the
    model sees m = 6 features.
    """
    ref = resources.files("stackboost") / "fixtures" / "longley.csv"
    with resources.as_file(ref) as p:
        ds = load_csv(p, target_columns=["Employed"])
    return Dataset(ds.features, ds.targets, ds.feature_names, name="longley")


def gen_friedman1(n: int, noise_sd: float = 1.0, seed: int = 0) -> Dataset:
    """Friedman #1: ten uniform features, five of them informative."""
    if n < 1:
        raise DataError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, 10))
    y = friedman1_response(x) + noise_sd * rng.standard_normal(n)
    return Dataset(x, y[:, None], name="friedman1")


def friedman1_response(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return (10 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20 * (x[:, 2] - 0.5) ** 2
            + 10 * x[:, 3] + 5 * x[:, 4])


def gen_friedman2(n: int, noise_sd: float = 0.0, seed: int = 0) -> Dataset:
    """Friedman #2: impedance of an RLC circuit over four input ranges."""
    if n < 1:
        raise DataError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = np.column_stack([
        rng.uniform(0, 100, n),
        rng.uniform(40 * np.pi, 560 * np.pi, n),
        rng.uniform(0, 1, n),
        rng.uniform(1, 11, n),
    ])
    y = friedman2_response(x) + noise_sd * rng.standard_normal(n)
    return Dataset(x, y[:, None], name="friedman2")


def friedman2_response(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.sqrt(x[:, 0] ** 2 + (x[:, 1] * x[:, 2] - 1 / (x[:, 1] * x[:, 3])) ** 2)


def gen_blobs(n: int, classes: int = 3, m: int = 5, separation: float = 5.0,
              seed: int = 0) -> Dataset:
    """Isotropic unit-variance Gaussian clusters around centres scaled by ``separation``."""
    if classes < 2:
        raise DataError("need at least two classes")
    if n < classes:
        raise DataError("n must be >= classes")
    rng = np.random.default_rng(seed)
    centres = separation * rng.standard_normal((classes, m))
    labels = rng.permutation(np.arange(n) % classes)
    x = centres[labels] + rng.standard_normal((n, m))
    return Dataset(x, one_hot(labels, classes), task=CLASSIFICATION,
                   class_labels=tuple(str(c) for c in range(classes)), name="blobs")


def make_cv_plans(dataset: Dataset | int, repetitions: int, train_fraction: float = 0.75,
                  seed: int = 0) -> list[SplitPlan]:
    """Independent random train/test partitions, one per repetition.

    Each repetition shuffles with its own generator seeded by ``(seed, repetition)``
    so that any single plan can be regenerated on its own.
    """
    n = dataset if isinstance(dataset, int) else dataset.n_rows
    n_train = int(math.floor(train_fraction * n))
    if not 0 < train_fraction < 1 or n_train < 1 or n - n_train < 1:
        raise DataError(f"degenerate split: {n_train} train / {n - n_train} test rows")
    if repetitions < 1:
        raise DataError("repetitions must be >= 1")
    plans = []
    for r in range(repetitions):
        perm = np.random.default_rng([seed, r]).permutation(n)
        plans.append(SplitPlan(np.sort(perm[:n_train]), np.sort(perm[n_train:]), r, seed))
    return plans


__all__ = [
    "CLASSIFICATION", "REGRESSION", "DataError", "Dataset", "SplitPlan", "friedman1_response",
    "friedman2_response", "gen_blobs", "gen_friedman1", "gen_friedman2", "load_csv",
    "load_longley", "make_cv_plans", "one_hot", "write_csv",
]
