"""Squared-error and softmax cross-entropy losses, evaluated row-wise.

Every function accepts either a single prediction vector of length T or a
batch of shape (N, T); gradients are taken with respect to the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQUARED = "squared"
SOFTMAX_CE = "softmax_ce"
KINDS = (SQUARED, SOFTMAX_CE)


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    s = z - z.max(axis=-1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


@dataclass(frozen=True)
class Loss:
    kind: str = SQUARED
    output_dim: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {KINDS}")
        if self.output_dim < 1:
            raise ValueError("output_dim must be >= 1")

    def _check(self, z, y):
        z = np.asarray(z, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if z.shape != y.shape or z.shape[-1] != self.output_dim:
            raise ValueError(f"shape mismatch: prediction {z.shape}, target {y.shape}, "
                             f"T={self.output_dim}")
        return z, y

    def value(self, z, y):
        """Per-row loss; scalar for a single vector."""
        z, y = self._check(z, y)
        if self.kind == SQUARED:
            return 0.5 * np.sum((y - z) ** 2, axis=-1)
        return -np.sum(y * log_softmax(z), axis=-1)

    def gradient(self, z, y) -> np.ndarray:
        z, y = self._check(z, y)
        if self.kind == SQUARED:
            return z - y
        return softmax(z) - y

    def mean(self, z, y) -> float:
        return float(np.mean(self.value(z, y)))


def loss_value(loss: Loss, z, y):
    return loss.value(z, y)


def loss_gradient(loss: Loss, z, y) -> np.ndarray:
    return loss.gradient(z, y)
