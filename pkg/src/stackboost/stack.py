"""Adaptive stacked ensembles: K boosting machines trained jointly with a meta-model.

Every epoch takes one gradient step on the meta-model and appends one stage
to every member.  Member ``j`` fits the slice of the composed-loss gradient
that flows back through the meta-model into its own outputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .gbm import Gbm, LearnerConfig, fit_base, gbm_init, gbm_train
from .loss import SOFTMAX_CE, SQUARED, Loss
from .meta import OPTIMAL, MetaModel, meta_init, meta_loss_param_grad, meta_sgd_step

log = logging.getLogger(__name__)

INIT_STRATEGIES = ("exact", "random", "disjoint", "mean")


def depth_schedule(K: int, depths=None) -> list[int]:
    """Member tree depths: ``depths`` cycled over K members (default 2, 3, ..., 21)."""
    depths = list(range(2, 22)) if depths is None else [int(d) for d in depths]
    if not depths:
        raise ValueError("empty depth schedule")
    return [depths[j % len(depths)] for j in range(K)]


@dataclass(frozen=True)
class StackConfig:
    K: int = 20
    epochs: int = 10
    member_lr: float = 0.05
    meta_lr: float = 0.05
    init: str = "exact"
    init_stages: int = 100
    init_lr: float = 0.1
    depths: tuple | None = None
    min_leaf: int = 1
    base: str = "tree"
    inner_stages: int = 3
    inner_depth: int = 2
    meta: str = "linear"
    hidden: tuple = (10, 10, 10)
    freeze_bias: bool = False
    meta_init: str | None = None
    meta_pretrain_steps: int | None = None
    residuals_use: str = "pre"
    loss: str | None = None
    standardize: bool = True
    early_stop_patience: int | None = None
    early_stop_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.epochs < 0 or self.init_stages < 0:
            raise ValueError("epochs and init_stages must be >= 0")
        if self.init not in INIT_STRATEGIES:
            raise ValueError(f"unknown init strategy {self.init!r}; expected {INIT_STRATEGIES}")
        if self.residuals_use not in ("pre", "post"):
            raise ValueError("residuals_use must be 'pre' or 'post'")
        if self.meta not in ("linear", "mlp"):
            raise ValueError(f"unknown meta kind {self.meta!r}")
        if not 0 < self.member_lr <= 1 or not 0 < self.init_lr <= 1:
            raise ValueError("member_lr and init_lr must lie in (0, 1]")
        if self.meta_lr < 0:
            raise ValueError("meta_lr must be >= 0")

    def member_configs(self) -> list[LearnerConfig]:
        return [LearnerConfig(self.base, d, self.min_leaf, self.inner_stages, self.inner_depth)
                for d in depth_schedule(self.K, self.depths)]

    @property
    def pretrain_steps(self) -> int:
        if self.meta_pretrain_steps is not None:
            return self.meta_pretrain_steps
        return 0 if self.meta == "linear" else 300


@dataclass
class StackedEnsemble:
    """K member GBMs whose concatenated outputs feed a meta-model.

    Members and meta-model work on targets shifted by ``target_shift`` and
    divided by ``target_scale``; :meth:`predict` maps back to data units.
    """

    members: list[Gbm]
    member_configs: list[LearnerConfig]
    meta: MetaModel
    loss: Loss
    member_lr: float = 0.05
    meta_lr: float = 0.05
    residuals_use: str = "pre"
    target_shift: np.ndarray | None = None
    target_scale: np.ndarray | None = None
    epochs_done: int = 0
    history: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        T = self.loss.output_dim
        if any(m.n_outputs != T for m in self.members):
            raise ValueError("all members must share the output dimension")
        if self.meta.input_dim != self.K * T or self.meta.output_dim != T:
            raise ValueError(f"meta-model must map {self.K * T} inputs to {T} outputs")
        if len(self.member_configs) != self.K:
            raise ValueError("need one learner config per member")
        if self.target_shift is None:
            self.target_shift = np.zeros(T)
        if self.target_scale is None:
            self.target_scale = np.ones(T)

    @property
    def K(self) -> int:
        return len(self.members)

    @property
    def n_outputs(self) -> int:
        return self.loss.output_dim

    def to_internal(self, Y) -> np.ndarray:
        return (np.asarray(Y, dtype=np.float64) - self.target_shift) / self.target_scale

    def ensemble_outputs(self, X) -> np.ndarray:
        """Concatenated member predictions, shape (N, K*T)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.concatenate([m.predict(X) for m in self.members], axis=1)

    def decision_function(self, X) -> np.ndarray:
        """Meta-model output in internal units (logits for classification)."""
        return self.meta.forward(self.ensemble_outputs(X))

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.predict(X[None, :])[0]
        return self.target_shift + self.target_scale * self.decision_function(X)

    def predict_class(self, X) -> np.ndarray:
        return np.argmax(self.predict(X), axis=-1)

    def composed_loss(self, X, Y) -> float:
        return self.loss.mean(self.decision_function(X), self.to_internal(Y))


def _standardisation(Y: np.ndarray, loss: Loss, enabled: bool):
    T = Y.shape[1]
    if not enabled or loss.kind != SQUARED:
        return np.zeros(T), np.ones(T)
    sd = Y.std(axis=0)
    return Y.mean(axis=0), np.where(sd > 0, sd, 1.0)


def _init_members(X, Y, configs, cfg: StackConfig, rng: np.random.Generator) -> list[Gbm]:
    K, T = len(configs), Y.shape[1]
    sq = Loss(SQUARED, T)
    members = []
    if cfg.init == "disjoint":
        if X.shape[0] < K:
            raise ValueError(f"disjoint initialisation needs N >= K (N={X.shape[0]}, K={K})")
        blocks = np.array_split(rng.permutation(X.shape[0]), K)
    for j, lc in enumerate(configs):
        if cfg.init == "exact":
            g = gbm_train((X, Y), sq, cfg.init_stages, lc, cfg.init_lr)
        elif cfg.init == "disjoint":
            b = np.sort(blocks[j])
            g = gbm_train((X[b], Y[b]), sq, cfg.init_stages, lc, cfg.init_lr)
        elif cfg.init == "random":
            sd = Y.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(T)
            pseudo = Y.mean(axis=0) + sd * rng.standard_normal(Y.shape)
            g = gbm_train((X, pseudo), sq, 1, lc, 1.0)
        else:
            g = gbm_init((X, Y), sq)
        g.learning_rate = cfg.member_lr
        g.history.clear()
        members.append(g)
    return members


def stack_init(dataset: Dataset, config: StackConfig = StackConfig()) -> StackedEnsemble:
    """Initialise members by ``config.init`` and build the meta-model."""
    X, Y = dataset.features, dataset.targets
    T = Y.shape[1]
    loss = Loss(config.loss or (SOFTMAX_CE if dataset.is_classification else SQUARED), T)
    shift, scale = _standardisation(Y, loss, config.standardize)
    Yi = (Y - shift) / scale
    rng = np.random.default_rng(config.seed)
    configs = config.member_configs()
    members = _init_members(X, Yi, configs, config, rng)

    outputs = None
    if config.meta_init == OPTIMAL:
        outputs = np.concatenate([m.predict(X) for m in members], axis=1)
    meta = meta_init(config.meta, config.K * T, T, config.hidden, int(rng.integers(2**63)),
                     config.meta_init, config.freeze_bias, outputs, Yi)
    ens = StackedEnsemble(members, configs, meta, loss, config.member_lr, config.meta_lr,
                          config.residuals_use, shift, scale)
    if config.pretrain_steps:
        train_meta(ens, dataset, config.pretrain_steps)
    ens.history.append(ens.composed_loss(X, Y))
    return ens


def train_meta(ensemble: StackedEnsemble, dataset: Dataset, steps: int,
               lr: float | None = None) -> StackedEnsemble:
    """Full-batch gradient descent on the meta-model alone, members frozen."""
    lr = ensemble.meta_lr if lr is None else lr
    t = ensemble.ensemble_outputs(dataset.features)
    y = ensemble.to_internal(dataset.targets)
    for _ in range(steps):
        meta_sgd_step(ensemble.meta, meta_loss_param_grad(ensemble.meta, ensemble.loss, t, y), lr)
    return ensemble


def _split_residuals(grad_t: np.ndarray, K: int, T: int) -> np.ndarray:
    return -grad_t.reshape(grad_t.shape[0], K, T)


def stack_member_residuals(ensemble: StackedEnsemble, dataset: Dataset,
                           outputs: np.ndarray | None = None) -> np.ndarray:
    """Per-member residuals, shape (N, K, T): minus the composed-loss gradient
    with respect to each member's block of meta-model inputs."""
    t = ensemble.ensemble_outputs(dataset.features) if outputs is None else outputs
    y = ensemble.to_internal(dataset.targets)
    grads = meta_loss_param_grad(ensemble.meta, ensemble.loss, t, y)
    return _split_residuals(grads.input_grad, ensemble.K, ensemble.n_outputs)


def stack_epoch(ensemble: StackedEnsemble, dataset: Dataset,
                outputs: np.ndarray | None = None) -> np.ndarray:
    """One joint update, in place.  Returns the refreshed member outputs on
    ``dataset`` so callers can carry them into the next epoch."""
    X = dataset.features
    K, T = ensemble.K, ensemble.n_outputs
    t = ensemble.ensemble_outputs(X) if outputs is None else outputs.copy()
    y = ensemble.to_internal(dataset.targets)

    grads = meta_loss_param_grad(ensemble.meta, ensemble.loss, t, y)
    residuals = _split_residuals(grads.input_grad, K, T)
    meta_sgd_step(ensemble.meta, grads, ensemble.meta_lr)
    if ensemble.residuals_use == "post":
        residuals = stack_member_residuals(ensemble, dataset, t)

    for j, (member, lc) in enumerate(zip(ensemble.members, ensemble.member_configs)):
        base = fit_base(X, residuals[:, j, :], lc)
        member.stages.append((base, ensemble.member_lr))
        t[:, j * T:(j + 1) * T] += ensemble.member_lr * base.predict(X)
    ensemble.epochs_done += 1
    ensemble.history.append(ensemble.loss.mean(ensemble.meta.forward(t), y))
    return t


def _truncate(ensemble: StackedEnsemble, n_stages: list[int]) -> None:
    for m, n in zip(ensemble.members, n_stages):
        del m.stages[n:]


def stack_train(dataset: Dataset, config: StackConfig = StackConfig()) -> StackedEnsemble:
    """Initialise, then run ``config.epochs`` joint epochs.

    With ``early_stop_patience`` set, a random ``early_stop_fraction`` of rows
    is held out and the model is rolled back to its best validation epoch.
    """
    train, valid = dataset, None
    if config.early_stop_patience is not None:
        perm = np.random.default_rng([config.seed, 1]).permutation(dataset.n_rows)
        n_val = max(1, int(round(config.early_stop_fraction * dataset.n_rows)))
        if n_val >= dataset.n_rows:
            raise ValueError("early stopping leaves no training rows")
        valid, train = dataset.subset(np.sort(perm[:n_val])), dataset.subset(np.sort(perm[n_val:]))

    ens = stack_init(train, config)
    t = ens.ensemble_outputs(train.features)
    best, best_state, stale = np.inf, None, 0
    for q in range(config.epochs):
        t = stack_epoch(ens, train, t)
        log.debug("epoch %d: training loss %.6g", q + 1, ens.history[-1])
        if valid is not None:
            v = ens.composed_loss(valid.features, valid.targets)
            if v < best:
                best, stale = v, 0
                best_state = ([m.n_stages for m in ens.members], ens.meta.copy(), ens.epochs_done)
            else:
                stale += 1
                if stale > config.early_stop_patience:
                    break
    if valid is not None and best_state is not None:
        n_stages, meta, epochs = best_state
        _truncate(ens, n_stages)
        ens.meta = meta
        ens.epochs_done = epochs
        del ens.history[epochs + 1:]
    return ens


def stack_predict(ensemble: StackedEnsemble, x) -> np.ndarray:
    return ensemble.predict(x)


def stack_predict_class(ensemble: StackedEnsemble, x):
    return ensemble.predict_class(x)


@dataclass(frozen=True)
class MemberWeight:
    index: int
    config: LearnerConfig
    magnitude: float


def member_weight_report(ensemble: StackedEnsemble) -> list[MemberWeight]:
    """Aggregate meta weight magnitude per member, largest first.

    Linear meta: mean absolute weight of the member's input rows, summed over
    outputs (so 1/K averaging reports 1/K for any T).  MLP: mean absolute
    first-layer weight over the member's input rows.
    """
    T = ensemble.n_outputs
    W = ensemble.meta.W if ensemble.meta.kind == "linear" else ensemble.meta.weights[0]
    scale = T if ensemble.meta.kind == "linear" else 1
    out = []
    for j, lc in enumerate(ensemble.member_configs):
        block = np.abs(W[j * T:(j + 1) * T])
        out.append(MemberWeight(j, lc, float(block.mean() * scale)))
    return sorted(out, key=lambda w: (-w.magnitude, w.index))
