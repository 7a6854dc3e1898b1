"""Random forest baseline: bootstrap-bagged trees with per-split feature subsampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .tree import RegressionTree, fit_tree


@dataclass(frozen=True)
class RandomForest:
    trees: list[RegressionTree]
    seeds: list[int]
    feature_subsample: int
    bootstrap: bool = True
    classification: bool = False

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        """Arithmetic mean of the tree outputs (class-score vectors for classification)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.predict(X[None, :])[0]
        out = np.zeros((X.shape[0], self.trees[0].n_outputs))
        for tree in self.trees:
            out += tree.predict(X)
        return out / self.n_trees

    def predict_class(self, X) -> np.ndarray:
        return np.argmax(self.predict(X), axis=-1)


def default_feature_subsample(m: int, classification: bool) -> int:
    return math.ceil(math.sqrt(m)) if classification else max(1, math.ceil(m / 3))


def rf_train(dataset: Dataset, n_trees: int = 100, max_depth: int | None = None,
             feature_subsample: int | None = None, seed: int = 0, bootstrap: bool = True,
             min_samples_leaf: int = 1) -> RandomForest:
    """Fit ``n_trees`` trees, each on N rows drawn with replacement.

    Per-tree seeds are spawned from ``seed``, so any tree can be refit alone.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X, Y = dataset.features, dataset.targets
    m = X.shape[1]
    k = feature_subsample or default_feature_subsample(m, dataset.is_classification)
    if not 1 <= k <= m:
        raise ValueError(f"feature_subsample must lie in [1, {m}], got {k}")
    seeds = [int(s.generate_state(1, np.uint64)[0])
             for s in np.random.SeedSequence(seed).spawn(n_trees)]
    trees = []
    for s in seeds:
        rng = np.random.default_rng(s)
        rows = rng.integers(0, X.shape[0], X.shape[0]) if bootstrap else None
        trees.append(fit_tree(X, Y, max_depth, min_samples_leaf, rows,
                              max_features=k if k < m else None, seed=int(rng.integers(2**32))))
    return RandomForest(trees, seeds, k, bootstrap, dataset.is_classification)


def rf_predict(forest: RandomForest, x) -> np.ndarray:
    return forest.predict(x)
