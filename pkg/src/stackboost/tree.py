"""Exact greedy regression trees with vector-valued leaves.

Trees are stored as flat pre-order node arrays.  A node with ``feature == -1``
is a leaf; otherwise rows with ``x[feature] <= threshold`` go left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

LEAF = -1
UNLIMITED_DEPTH = 2**31 - 1


@dataclass(frozen=True)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, T)
    n_samples: np.ndarray
    max_depth: int | None
    min_samples_leaf: int = 1

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def n_outputs(self) -> int:
        return self.value.shape[1]

    def depth(self) -> int:
        d = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                d[self.left[i]] = d[self.right[i]] = d[i] + 1
        return int(d.max())

    def apply(self, X) -> np.ndarray:
        """Index of the leaf each row of ``X`` lands in."""
        X = np.array(np.atleast_2d(X), dtype=np.float64, order="C")
        return _route(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.value[self.apply(X[None, :])[0]].copy()
        return self.value[self.apply(X)]


@njit(cache=True)
def _route(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.intp)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def _node_split(X, Y, seg, min_leaf, feats):
    """Best split of rows ``seg`` over candidate features ``feats`` (ascending).

    Returns (feature, threshold, gain); feature -1 when nothing improves.
    """
    n = seg.size
    T = Y.shape[1]
    mean = np.zeros(T)
    for i in range(n):
        for c in range(T):
            mean[c] += Y[seg[i], c]
    for c in range(T):
        mean[c] /= n
    best_f, best_t, best_g = -1, 0.0, 0.0
    xs = np.empty(n)
    acc = np.empty(T)
    for f in feats:
        for i in range(n):
            xs[i] = X[seg[i], f]
        order = np.argsort(xs, kind="mergesort")
        acc[:] = 0.0
        for i in range(n - 1):
            r = seg[order[i]]
            for c in range(T):
                acc[c] += Y[r, c] - mean[c]
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            lo = xs[order[i]]
            hi = xs[order[i + 1]]
            if not lo < hi:
                continue
            s = 0.0
            for c in range(T):
                s += acc[c] * acc[c]
            # centred targets: right sum = -left sum, so SSE drop = |S_L|^2 (1/nl + 1/nr)
            g = s * (1.0 / nl + 1.0 / nr)
            if g > best_g * (1.0 + 1e-12) and g > 0.0:
                thr = 0.5 * (lo + hi)
                if not (lo <= thr and thr < hi):
                    thr = lo
                best_f, best_t, best_g = f, thr, g
    return best_f, best_t, best_g


@njit(cache=True)
def _grow(X, Y, max_depth, min_leaf, max_features, seed):
    N, m = X.shape
    T = Y.shape[1]
    if max_features > 0:
        np.random.seed(seed)
    cap = 2 * N - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, T))
    count = np.zeros(cap, dtype=np.int64)
    rows = np.arange(N)
    buf = np.empty(N, dtype=np.int64)
    all_feats = np.arange(m)
    pool = np.arange(m)

    # stack entries: start, end, depth, parent, is_left
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_parent = np.empty(cap, dtype=np.int64)
    st_left = np.empty(cap, dtype=np.bool_)
    top = 0
    st_start[0], st_end[0], st_depth[0], st_parent[0], st_left[0] = 0, N, 0, -1, False
    top = 1
    n_nodes = 0
    while top > 0:
        top -= 1
        start, end, depth = st_start[top], st_end[top], st_depth[top]
        parent, is_left = st_parent[top], st_left[top]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        seg = rows[start:end]
        n = end - start
        count[node] = n
        for i in range(n):
            for c in range(T):
                value[node, c] += Y[seg[i], c]
        for c in range(T):
            value[node, c] /= n
        if depth >= max_depth or n < 2 * min_leaf:
            continue
        pure = True
        for i in range(1, n):
            for c in range(T):
                if Y[seg[i], c] != Y[seg[0], c]:
                    pure = False
        if pure:
            continue
        if max_features > 0 and max_features < m:
            for i in range(max_features):
                j = i + np.random.randint(m - i)
                pool[i], pool[j] = pool[j], pool[i]
            feats = np.sort(pool[:max_features].copy())
        else:
            feats = all_feats
        f, thr, g = _node_split(X, Y, seg, min_leaf, feats)
        if f < 0:
            continue
        feature[node] = f
        threshold[node] = thr
        # stable in-place partition of the segment
        nl = 0
        for i in range(n):
            if X[seg[i], f] <= thr:
                buf[nl] = seg[i]
                nl += 1
        k = nl
        for i in range(n):
            if not X[seg[i], f] <= thr:
                buf[k] = seg[i]
                k += 1
        for i in range(n):
            seg[i] = buf[i]
        # push right first so the left subtree is numbered first (pre-order)
        st_start[top], st_end[top], st_depth[top] = start + nl, end, depth + 1
        st_parent[top], st_left[top] = node, False
        top += 1
        st_start[top], st_end[top], st_depth[top] = start, start + nl, depth + 1
        st_parent[top], st_left[top] = node, True
        top += 1
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], count[:n_nodes])


def fit_tree(features, targets, max_depth: int | None, min_samples_leaf: int = 1,
             row_indices=None, max_features: int | None = None,
             seed: int | None = None) -> RegressionTree:
    """Grow a CART tree on ``targets`` (N x T) by exhaustive greedy splitting.

    Each split maximises the drop in squared error summed over the T outputs;
    equal drops go to the lowest feature index, then the lowest threshold.
    ``max_features`` re-draws that many candidate features at every node
    (random-subspace growth) from a generator seeded by ``seed``.
    ``max_depth=None`` grows until leaves are pure or too small to split.
    """
    # fresh writable copies keep a single compiled signature
    X = np.array(features, dtype=np.float64, order="C")
    Y = np.array(targets, dtype=np.float64, order="C")
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"inconsistent shapes: features {X.shape}, targets {Y.shape}")
    if row_indices is not None:
        rows = np.asarray(row_indices, dtype=np.intp)
        X, Y = X[rows], Y[rows]
    if X.shape[0] < 1:
        raise ValueError("cannot fit a tree on zero rows")
    depth = UNLIMITED_DEPTH if max_depth is None else int(max_depth)
    if depth < 1 or min_samples_leaf < 1:
        raise ValueError("max_depth and min_samples_leaf must be >= 1")
    mf = 0
    if max_features is not None and max_features < X.shape[1]:
        if max_features < 1:
            raise ValueError("max_features must be >= 1")
        if seed is None:
            raise ValueError("max_features requires a seed")
        mf = int(max_features)
    f, t, lft, rgt, v, cnt = _grow(X, Y, depth, int(min_samples_leaf),
                                   mf, 0 if seed is None else int(seed) % 2**32)
    return RegressionTree(f.astype(np.intp), t, lft.astype(np.intp), rgt.astype(np.intp), v,
                          cnt.astype(np.intp), max_depth, min_samples_leaf)


def predict_tree(tree: RegressionTree, x) -> np.ndarray:
    return tree.predict(x)
