"""Differentiable second-level combiners over concatenated member outputs.

Both meta-models map a batch ``t`` of shape (N, I) to predictions (N, T) and
back-propagate an upstream gradient dL/dz to parameters and inputs.  Input
column ``k * T + c`` carries output ``c`` of member ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loss import Loss

UNIFORM = "uniform"
OPTIMAL = "optimal"
RANDOM = "random"


@dataclass
class MetaGradients:
    param_grad: list  # one array per parameter, batch mean
    input_grad: np.ndarray  # (N, I): dL/dt per row


class MetaModel:
    input_dim: int
    output_dim: int
    freeze_bias: bool

    def parameters(self) -> list[np.ndarray]:
        raise NotImplementedError

    def forward(self, t) -> np.ndarray:
        raise NotImplementedError

    def backward(self, t, dz) -> tuple[list[np.ndarray], np.ndarray]:
        """Batch-mean parameter gradients and per-row input gradients."""
        raise NotImplementedError

    def _check(self, t) -> tuple[np.ndarray, bool]:
        t = np.asarray(t, dtype=np.float64)
        single = t.ndim == 1
        t = np.atleast_2d(t)
        if t.shape[1] != self.input_dim:
            raise ValueError(f"meta input has {t.shape[1]} columns, expected {self.input_dim}")
        return t, single

    def __call__(self, t) -> np.ndarray:
        return self.forward(t)

    def copy(self) -> "MetaModel":
        raise NotImplementedError


class LinearMeta(MetaModel):
    """Affine combiner ``z = t @ W + b`` with ``W`` of shape (I, T)."""

    kind = "linear"

    def __init__(self, weights, bias=None, freeze_bias: bool = False):
        self.W = np.array(weights, dtype=np.float64, ndmin=2)
        if self.W.shape[0] == 1 and np.ndim(weights) == 1:
            self.W = self.W.T
        self.b = np.zeros(self.W.shape[1]) if bias is None else np.array(bias, dtype=np.float64).reshape(-1)
        if self.b.size != self.W.shape[1]:
            raise ValueError("bias length must equal the number of outputs")
        self.freeze_bias = freeze_bias
        if freeze_bias:
            self.b[:] = 0.0

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def output_dim(self) -> int:
        return self.W.shape[1]

    def parameters(self):
        return [self.W, self.b]

    def forward(self, t):
        t, single = self._check(t)
        z = t @ self.W + self.b
        return z[0] if single else z

    def backward(self, t, dz):
        t, _ = self._check(t)
        dz = np.atleast_2d(dz)
        n = t.shape[0]
        dW = t.T @ dz / n
        db = np.zeros_like(self.b) if self.freeze_bias else dz.mean(axis=0)
        return [dW, db], dz @ self.W.T

    def copy(self):
        return LinearMeta(self.W.copy(), self.b.copy(), self.freeze_bias)


class MlpMeta(MetaModel):
    """Fully connected tanh network with an identity output layer."""

    kind = "mlp"

    def __init__(self, weights: list, biases: list, freeze_bias: bool = False):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64).reshape(-1) for b in biases]
        for a, b in zip(self.weights[:-1], self.weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise ValueError("consecutive layer sizes do not chain")
        self.freeze_bias = freeze_bias
        if freeze_bias:
            for b in self.biases:
                b[:] = 0.0

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights[:-1])

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def _forward(self, t):
        acts = [t]
        a = t
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if i < len(self.weights) - 1:
                a = np.tanh(a)
            acts.append(a)
        return acts

    def forward(self, t):
        t, single = self._check(t)
        z = self._forward(t)[-1]
        return z[0] if single else z

    def backward(self, t, dz):
        t, _ = self._check(t)
        acts = self._forward(t)
        n = t.shape[0]
        delta = np.atleast_2d(dz)
        grads = []
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            gw = a_in.T @ delta / n
            gb = np.zeros_like(self.biases[i]) if self.freeze_bias else delta.mean(axis=0)
            grads = [gw, gb] + grads
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (1.0 - a_in ** 2)
        return grads, delta

    def copy(self):
        return MlpMeta([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                       self.freeze_bias)


def meta_forward(meta: MetaModel, t) -> np.ndarray:
    return meta.forward(t)


def meta_loss_input_grad(meta: MetaModel, loss: Loss, t, y) -> np.ndarray:
    """Gradient of ``loss(meta(t), y)`` with respect to ``t``."""
    t = np.asarray(t, dtype=np.float64)
    z = meta.forward(t)
    _, gin = meta.backward(t, loss.gradient(z, y))
    return gin[0] if t.ndim == 1 else gin


def meta_loss_param_grad(meta: MetaModel, loss: Loss, t, y) -> MetaGradients:
    t = np.atleast_2d(np.asarray(t, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if t.shape[0] == 0:
        raise ValueError("empty batch")
    pg, gin = meta.backward(t, loss.gradient(meta.forward(t), y))
    return MetaGradients(pg, gin)


def meta_sgd_step(meta: MetaModel, gradients: MetaGradients, lr: float) -> MetaModel:
    """In-place gradient step on every parameter; returns ``meta``."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    for p, g in zip(meta.parameters(), gradients.param_grad):
        p -= lr * g
    return meta


def uniform_weights(K: int, T: int) -> np.ndarray:
    """(K*T, T) matrix averaging each output over the K members."""
    return np.tile(np.eye(T), (K, 1)) / K


def optimal_linear(outputs, targets, freeze_bias: bool = False) -> LinearMeta:
    """Least-squares affine combiner for frozen member outputs."""
    t = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    y = np.asarray(targets, dtype=np.float64).reshape(t.shape[0], -1)
    A = t if freeze_bias else np.column_stack([t, np.ones(t.shape[0])])
    sol = np.linalg.lstsq(A, y, rcond=None)[0]
    if freeze_bias:
        return LinearMeta(sol, None, True)
    return LinearMeta(sol[:-1], sol[-1], False)


def meta_init(kind: str, input_dim: int, output_dim: int, hidden=(), seed: int = 0,
              mode: str | None = None, freeze_bias: bool = False,
              outputs=None, targets=None) -> MetaModel:
    """Build a meta-model.

    ``mode`` defaults to ``"uniform"`` (1/K averaging) for linear and ``"random"``
    (Glorot-uniform weights, zero biases) for MLP.  ``"optimal"`` fits the
    linear combiner to ``outputs``/``targets`` by least squares.
    """
    if kind not in ("linear", "mlp"):
        raise ValueError(f"unknown meta kind {kind!r}")
    mode = mode or (UNIFORM if kind == "linear" else RANDOM)
    if kind == "mlp" and mode != RANDOM:
        raise ValueError(f"meta init {mode!r} is only available for the linear meta-model")
    if mode == UNIFORM:
        if input_dim % output_dim:
            raise ValueError("input_dim must be a multiple of output_dim")
        return LinearMeta(uniform_weights(input_dim // output_dim, output_dim), None, freeze_bias)
    if mode == OPTIMAL:
        if outputs is None or targets is None:
            raise ValueError("optimal init needs frozen member outputs and targets")
        return optimal_linear(outputs, targets, freeze_bias)
    if mode != RANDOM:
        raise ValueError(f"unknown meta init {mode!r}")
    rng = np.random.default_rng(seed)
    sizes = [input_dim, *([] if kind == "linear" else list(hidden)), output_dim]
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
    biases = [np.zeros(w.shape[1]) for w in weights]
    if kind == "linear":
        return LinearMeta(weights[0], biases[0], freeze_bias)
    return MlpMeta(weights, biases, freeze_bias)
