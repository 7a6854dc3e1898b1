import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stackboost.tree import LEAF, fit_tree, predict_tree


def brute_force_root(X, y):
    """Best (gain, feature, threshold) over every midpoint split."""
    total = ((y - y.mean(axis=0)) ** 2).sum()
    best = (0.0, None, None)
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = (lo + hi) / 2
            mask = X[:, f] <= thr
            left, right = y[mask], y[~mask]
            sse = ((left - left.mean(axis=0)) ** 2).sum() + ((right - right.mean(axis=0)) ** 2).sum()
            gain = total - sse
            if gain > best[0] * (1 + 1e-12) + 1e-300 and gain > 1e-12 * max(total, 1e-300):
                best = (gain, f, thr)
    return best


def root_gain(tree, X, y):
    if tree.feature[0] == LEAF:
        return 0.0
    mask = X[:, tree.feature[0]] <= tree.threshold[0]
    total = ((y - y.mean(axis=0)) ** 2).sum()
    sse = sum(((p - p.mean(axis=0)) ** 2).sum() for p in (y[mask], y[~mask]))
    return total - sse


def test_step_function_split():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    t = fit_tree(X, y, max_depth=1)
    assert t.feature[0] == 0 and t.threshold[0] == 2.5
    np.testing.assert_array_equal(t.predict(X)[:, 0], y)


def test_constant_targets_give_single_leaf():
    X = np.random.default_rng(0).normal(size=(10, 3))
    t = fit_tree(X, np.full(10, 4.2), max_depth=5)
    assert t.n_nodes == 1 and t.value[0, 0] == pytest.approx(4.2, rel=1e-15)


def test_vector_leaves():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    Y = np.array([[1.0, -1.0], [1.0, -1.0], [5.0, 2.0], [5.0, 2.0]])
    t = fit_tree(X, Y, max_depth=1)
    np.testing.assert_array_equal(t.predict(X), Y)
    assert t.n_outputs == 2


def test_saturated_tree_interpolates():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(30, 3))
    y = rng.normal(size=30)
    t = fit_tree(X, y, max_depth=None)
    np.testing.assert_allclose(predict_tree(t, X)[:, 0], y, atol=1e-12)


def test_tie_break_prefers_lowest_feature_then_threshold():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    t = fit_tree(X, y, max_depth=1)
    assert t.feature[0] == 0
    # two equally good thresholds on a symmetric target: lowest wins
    X2 = np.array([[0.0], [1.0], [2.0]])
    t2 = fit_tree(X2, np.array([0.0, 1.0, 0.0]), max_depth=1)
    assert t2.threshold[0] == 0.5


def test_min_samples_leaf_respected():
    rng = np.random.default_rng(2)
    X = rng.uniform(size=(40, 2))
    t = fit_tree(X, rng.normal(size=40), max_depth=None, min_samples_leaf=5)
    leaves = t.feature == LEAF
    assert np.all(t.n_samples[leaves] >= 5)


def test_bad_arguments():
    with pytest.raises(ValueError):
        fit_tree(np.zeros((0, 2)), np.zeros(0), max_depth=2)
    with pytest.raises(ValueError):
        fit_tree(np.zeros((3, 2)), np.zeros(3), max_depth=2, min_samples_leaf=0)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(2, 12), m=st.integers(1, 3), T=st.integers(1, 2),
       seed=st.integers(0, 2**31), depth=st.integers(1, 4), grid=st.booleans())
def test_tree_invariants(n, m, T, seed, depth, grid):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 3, (n, m)).astype(float) if grid else rng.normal(size=(n, m))
    Y = rng.normal(size=(n, T))
    t = fit_tree(X, Y, max_depth=depth)
    assert t.depth() <= depth
    assert t.n_samples[0] == n
    internal = t.feature != LEAF
    # children partition their parent's rows
    np.testing.assert_array_equal(t.n_samples[t.left[internal]] + t.n_samples[t.right[internal]],
                                  t.n_samples[internal])
    leaf = t.apply(X)
    for node in np.unique(leaf):
        np.testing.assert_allclose(t.value[node], Y[leaf == node].mean(axis=0), atol=1e-12)
    # splitting never increases the squared error
    sse = ((Y - t.predict(X)) ** 2).sum()
    assert sse <= ((Y - Y.mean(axis=0)) ** 2).sum() + 1e-9
    gain, _, _ = brute_force_root(X, Y)
    assert root_gain(t, X, Y) == pytest.approx(gain, rel=1e-9, abs=1e-12)
