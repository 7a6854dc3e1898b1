"""Central finite-difference checks for losses, meta-models and member residuals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, one_hot
from .gbm import LearnerConfig, gbm_train
from .loss import KINDS, SOFTMAX_CE, SQUARED, Loss
from .meta import LinearMeta, meta_init, meta_loss_input_grad, meta_loss_param_grad
from .stack import StackedEnsemble, stack_member_residuals

STEP = 1e-6
TOLERANCE = 1e-5
# components below this magnitude are compared absolutely
ERROR_FLOOR = 1e-3


def central_difference(f, x: np.ndarray, h: float = STEP) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` (any shape) by central differences."""
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f(x)
        flat[i] = old - h
        fm = f(x)
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * h)
    return g


def relative_error(analytic, numeric, floor: float = ERROR_FLOOR) -> float:
    """Largest componentwise |a - n| / max(|a|, |n|, floor)."""
    a = np.ravel(np.asarray(analytic, dtype=np.float64))
    n = np.ravel(np.asarray(numeric, dtype=np.float64))
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


@dataclass
class GradcheckReport:
    max_error: dict = field(default_factory=dict)
    trials: int = 0
    tolerance: float = TOLERANCE

    def record(self, suite: str, err: float) -> None:
        self.max_error[suite] = max(self.max_error.get(suite, 0.0), err)

    @property
    def passed(self) -> bool:
        return all(e <= self.tolerance for e in self.max_error.values())


def _targets(rng, kind: str, n: int, T: int) -> np.ndarray:
    if kind == SOFTMAX_CE:
        return one_hot(rng.integers(0, T, n), T)
    return rng.standard_normal((n, T))


def _random_meta(rng, kind: str, K: int, T: int):
    if kind == "linear":
        return LinearMeta(rng.normal(0, 1, (K * T, T)), rng.normal(0, 1, T))
    hidden = tuple(int(h) for h in rng.integers(2, 6, rng.integers(1, 4)))
    meta = meta_init("mlp", K * T, T, hidden, int(rng.integers(2**32)))
    for b in meta.biases:
        b[:] = rng.normal(0, 0.5, b.size)
    return meta


def check_loss(rng, kind: str, T: int, perturb: float = 0.0) -> float:
    loss = Loss(kind, T)
    z = rng.normal(0, 2, T)
    y = _targets(rng, kind, 1, T)[0]
    analytic = loss.gradient(z, y) + perturb
    return relative_error(analytic, central_difference(lambda v: loss.value(v, y), z))


def check_meta_input(rng, meta, loss: Loss, perturb: float = 0.0) -> float:
    t = rng.normal(0, 1, meta.input_dim)
    y = _targets(rng, loss.kind, 1, loss.output_dim)[0]
    analytic = meta_loss_input_grad(meta, loss, t, y) + perturb
    numeric = central_difference(lambda v: loss.value(meta.forward(v), y), t)
    return relative_error(analytic, numeric)


def check_meta_params(rng, meta, loss: Loss, n: int = 4, perturb: float = 0.0) -> float:
    t = rng.normal(0, 1, (n, meta.input_dim))
    y = _targets(rng, loss.kind, n, loss.output_dim)
    grads = meta_loss_param_grad(meta, loss, t, y).param_grad
    worst = 0.0
    for p, g in zip(meta.parameters(), grads):
        def f(v, p=p):
            saved = p.copy()
            p[...] = v
            out = loss.mean(meta.forward(t), y)
            p[...] = saved
            return out
        worst = max(worst, relative_error(g + perturb, central_difference(f, p.copy())))
    return worst


def check_stack_residuals(rng, meta, loss: Loss, n: int = 5, perturb: float = 0.0) -> float:
    """Member residuals of a small fitted ensemble against -d/dt of the composed loss."""
    K, T = meta.input_dim // loss.output_dim, loss.output_dim
    X = rng.uniform(0, 1, (n, 2))
    Y = _targets(rng, loss.kind, n, T)
    members = [gbm_train((X, Y), Loss(SQUARED, T), 2, LearnerConfig("tree", 1 + j % 2), 0.5)
               for j in range(K)]
    task = "classification" if loss.kind == SOFTMAX_CE else "regression"
    ds = Dataset(X, Y, task=task)
    ens = StackedEnsemble(members, [LearnerConfig()] * K, meta, loss)
    t = ens.ensemble_outputs(X)
    res = stack_member_residuals(ens, ds, t) + perturb
    worst = 0.0
    for i in range(n):
        numeric = central_difference(lambda v: loss.value(meta.forward(v), Y[i]), t[i])
        worst = max(worst, relative_error(res[i].reshape(-1), -numeric))
    return worst


def run_gradcheck(seed: int = 0, trials: int = 100, perturb: float = 0.0) -> GradcheckReport:
    """Cycle through every (loss, meta kind, T in {1, 3}, K in {1, 5}) combination
    ``trials`` times in total, checking all four gradient suites each time.

    ``perturb`` is added to every analytic gradient (fault injection).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    grid = [(lk, mk, T, K) for lk in KINDS for mk in ("linear", "mlp") for T in (1, 3)
            for K in (1, 5)]
    report = GradcheckReport(trials=trials)
    for i in range(trials):
        lk, mk, T, K = grid[i % len(grid)]
        loss = Loss(lk, T)
        meta = _random_meta(rng, mk, K, T)
        report.record("loss", check_loss(rng, lk, T, perturb))
        report.record("meta_input", check_meta_input(rng, meta, loss, perturb))
        report.record("meta_params", check_meta_params(rng, meta, loss, perturb=perturb))
        report.record("stack_residuals", check_stack_residuals(rng, meta, loss, perturb=perturb))
    return report
