"""Plain gradient boosting: residual fitting, line search and staged prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .data import Dataset
from .loss import SQUARED, Loss
from .tree import RegressionTree, fit_tree

GAMMA_MAX = 8.0
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LearnerConfig:
    """Per-stage base learner: a tree of ``depth``, or a small squared-loss GBM
    of ``inner_stages`` trees of ``inner_depth`` (shrinkage 1)."""

    kind: str = "tree"
    depth: int = 3
    min_leaf: int = 1
    inner_stages: int = 3
    inner_depth: int = 2

    def __post_init__(self):
        if self.kind not in ("tree", "gbm"):
            raise ValueError(f"unknown base learner {self.kind!r}")
        if self.depth < 1 or self.min_leaf < 1 or self.inner_stages < 0 or self.inner_depth < 1:
            raise ValueError(f"invalid learner config {self}")


@dataclass
class Gbm:
    init_prediction: np.ndarray
    loss: Loss
    learning_rate: float = 0.1
    stages: list = field(default_factory=list)  # [(base learner, coefficient)]
    history: list = field(default_factory=list, repr=False, compare=False)

    @property
    def n_outputs(self) -> int:
        return self.init_prediction.size

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.predict(X[None, :])[0]
        out = np.tile(self.init_prediction, (X.shape[0], 1))
        for base, coef in self.stages:
            out += coef * base.predict(X)
        return out

    def staged_predict(self, X):
        """Yield predictions after 0, 1, ..., M stages."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.tile(self.init_prediction, (X.shape[0], 1))
        yield out.copy()
        for base, coef in self.stages:
            out += coef * base.predict(X)
            yield out.copy()


BaseLearner = Union[RegressionTree, Gbm]


def _xy(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, Dataset):
        return data.features, data.targets
    X, Y = data
    Y = np.asarray(Y, dtype=np.float64)
    return np.asarray(X, dtype=np.float64), Y[:, None] if Y.ndim == 1 else Y


def gbm_init(data, loss: Loss | None = None, strategy="mean", learning_rate: float = 0.1) -> Gbm:
    """Zero-stage model predicting a constant.

    ``strategy="mean"`` uses the column means of the targets (class frequencies
    for one-hot targets); a number or vector is used as the constant itself.
    """
    _, Y = _xy(data)
    if Y.shape[0] < 1:
        raise ValueError("cannot initialise on an empty dataset")
    loss = loss or Loss(SQUARED, Y.shape[1])
    if isinstance(strategy, str):
        if strategy != "mean":
            raise ValueError(f"unknown init strategy {strategy!r}")
        init = Y.mean(axis=0)
    else:
        init = np.broadcast_to(np.asarray(strategy, dtype=np.float64), (Y.shape[1],)).copy()
    return Gbm(init, loss, learning_rate)


def gbm_residuals(gbm: Gbm, data, current: np.ndarray | None = None) -> np.ndarray:
    X, Y = _xy(data)
    z = gbm.predict(X) if current is None else current
    return -gbm.loss.gradient(z, Y)


def line_search(loss: Loss, current_preds, base_preds, targets, gamma_max: float = GAMMA_MAX,
                tol: float = 1e-6) -> float:
    """Step along ``base_preds`` minimising the mean loss, by golden-section search.

    Squared error always gets 1.  The result never does worse than a zero step.
    """
    if loss.kind == SQUARED:
        return 1.0
    base_preds = np.asarray(base_preds, dtype=np.float64)
    if not np.any(base_preds):
        return 0.0

    def f(g):
        return loss.mean(current_preds + g * base_preds, targets)

    a, b = 0.0, gamma_max
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    g = 0.5 * (a + b)
    return g if f(g) <= f(0.0) else 0.0


def fit_base(X: np.ndarray, R: np.ndarray, config: LearnerConfig) -> BaseLearner:
    """Least-squares fit of one base learner to the residual matrix ``R``."""
    if config.kind == "tree":
        return fit_tree(X, R, config.depth, config.min_leaf)
    inner = LearnerConfig("tree", config.inner_depth, config.min_leaf)
    return gbm_train((X, R), Loss(SQUARED, R.shape[1]), config.inner_stages, inner, 1.0)


def _fit_stage(gbm: Gbm, X, Y, config: LearnerConfig, current: np.ndarray):
    R = -gbm.loss.gradient(current, Y)
    base = fit_base(X, R, config)
    base_preds = base.predict(X)
    gamma = line_search(gbm.loss, current, base_preds, Y)
    coef = gamma * gbm.learning_rate
    gbm.stages.append((base, coef))
    return base_preds, coef


def gbm_fit_stage(gbm: Gbm, data, base_config: LearnerConfig = LearnerConfig()) -> Gbm:
    """Append one stage fitted to the current residuals (in place; returns ``gbm``)."""
    X, Y = _xy(data)
    _fit_stage(gbm, X, Y, base_config, gbm.predict(X))
    return gbm


def gbm_train(data, loss: Loss | None = None, stages: int = 100,
              base_config: LearnerConfig = LearnerConfig(), learning_rate: float = 0.1,
              init="mean") -> Gbm:
    """Initialise, then run ``stages`` boosting steps.

    ``gbm.history`` records the mean training loss after 0..M stages.
    """
    if not 0 < learning_rate <= 1:
        raise ValueError("learning_rate must lie in (0, 1]")
    if stages < 0:
        raise ValueError("stages must be >= 0")
    X, Y = _xy(data)
    gbm = gbm_init((X, Y), loss, init, learning_rate)
    current = np.tile(gbm.init_prediction, (X.shape[0], 1))
    gbm.history.append(gbm.loss.mean(current, Y))
    for _ in range(stages):
        base_preds, coef = _fit_stage(gbm, X, Y, base_config, current)
        current += coef * base_preds
        gbm.history.append(gbm.loss.mean(current, Y))
    return gbm


def gbm_predict(gbm: Gbm, x) -> np.ndarray:
    return gbm.predict(x)
