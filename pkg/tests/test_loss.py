import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stackboost.gradcheck import central_difference, relative_error
from stackboost.loss import SOFTMAX_CE, SQUARED, Loss, log_softmax, softmax

finite = st.floats(-50, 50, allow_nan=False)


def test_squared_uses_half_convention():
    loss = Loss(SQUARED, 2)
    assert loss.value(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == pytest.approx(2.5)
    np.testing.assert_allclose(loss.gradient(np.array([1.0, 2.0]), np.zeros(2)), [1.0, 2.0])


def test_softmax_ce_hand_values():
    loss = Loss(SOFTMAX_CE, 2)
    z, y = np.zeros(2), np.array([1.0, 0.0])
    assert loss.value(z, y) == pytest.approx(np.log(2))
    np.testing.assert_allclose(loss.gradient(z, y), [-0.5, 0.5])


def test_large_logits_are_stable():
    loss = Loss(SOFTMAX_CE, 3)
    z = np.array([1000.0, -1000.0, 0.0])
    assert np.isfinite(loss.value(z, np.array([0.0, 1.0, 0.0])))
    np.testing.assert_allclose(softmax(z), [1, 0, 0], atol=1e-300)


def test_batch_mean():
    loss = Loss(SQUARED, 1)
    z = np.array([[1.0], [3.0]])
    y = np.zeros((2, 1))
    assert loss.mean(z, y) == pytest.approx((0.5 + 4.5) / 2)
    np.testing.assert_allclose(loss.value(z, y), [0.5, 4.5])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        Loss(SQUARED, 2).value(np.zeros(3), np.zeros(2))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 6), elements=finite))
def test_softmax_is_distribution(z):
    p = softmax(z)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(softmax(z + 7.0), p, atol=1e-12)
    np.testing.assert_allclose(np.exp(log_softmax(z)), p, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 5), elements=st.floats(-5, 5)),
       st.integers(0, 4), st.sampled_from([SQUARED, SOFTMAX_CE]))
def test_gradient_matches_finite_differences(z, cls, kind):
    T = z.size
    y = np.eye(T)[cls % T] if kind == SOFTMAX_CE else np.linspace(-1, 1, T)
    loss = Loss(kind, T)
    numeric = central_difference(lambda v: loss.value(v, y), z)
    assert relative_error(loss.gradient(z, y), numeric) <= 1e-5


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 4, elements=st.floats(-5, 5)))
def test_ce_gradient_sums_to_zero(z):
    g = Loss(SOFTMAX_CE, 4).gradient(z, np.eye(4)[1])
    assert abs(g.sum()) <= 1e-12


def test_reference_values():
    assert Loss(SQUARED, 1).value(np.zeros(1), np.array([2.0])) == 2.0
    ce = Loss(SOFTMAX_CE, 3)
    z, y = np.zeros(3), np.array([1.0, 0.0, 0.0])
    assert ce.value(z, y) == pytest.approx(np.log(3), rel=1e-15)
    np.testing.assert_allclose(ce.gradient(z, y), [-2 / 3, 1 / 3, 1 / 3], rtol=1e-15)
    assert ce.value(np.array([5.0, -3.0, 1.0]), np.eye(3)[1]) >= 0
