import numpy as np
import pytest
import math

from hypothesis import assume, given, settings, strategies as st

from stackboost.data import (CLASSIFICATION, DataError, Dataset, friedman1_response,
                             friedman2_response, gen_blobs, gen_friedman1,
                             gen_friedman2, load_csv, load_longley, make_cv_plans, write_csv)


def test_three_row_file(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
    ds = load_csv(p)
    assert (ds.n_rows, ds.n_features, ds.n_outputs) == (3, 2, 1)
    assert ds.feature_names == ("a", "b")
    np.testing.assert_array_equal(ds.targets[:, 0], [3, 6, 9])


def test_longley_fixture():
    ds = load_longley()
    assert (ds.n_rows, ds.n_features, ds.n_outputs) == (16, 6, 1)
    assert ds.targets[0, 0] == pytest.approx(60.323)


def test_class_labels_in_order_of_first_appearance(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("x,label\n0,dog\n1,cat\n2,dog\n3,bird\n")
    ds = load_csv(p, "label", CLASSIFICATION)
    assert ds.class_labels == ("dog", "cat", "bird")
    np.testing.assert_array_equal(ds.labels, [0, 1, 0, 2])
    np.testing.assert_array_equal(ds.targets.sum(axis=1), 1)


@pytest.mark.parametrize("body, fragment", [
    ("a,y\n1,2\nx,3\n", "row 3"),
    ("a,y\n1,2\ninf,3\n", "non-finite"),
    ("a,y\n", "empty"),
])
def test_load_errors(tmp_path, body, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataError, match=fragment):
        load_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises((DataError, OSError)):
        load_csv(tmp_path / "nope.csv")


def test_round_trip_15_digits(tmp_path):
    ds = gen_friedman1(40, 1.0, seed=5)
    write_csv(ds, tmp_path / "f.csv")
    back = load_csv(tmp_path / "f.csv")
    np.testing.assert_allclose(back.features, ds.features, rtol=1e-15)
    np.testing.assert_allclose(back.targets, ds.targets, rtol=1e-15)


def test_dataset_is_read_only():
    ds = gen_friedman2(10, seed=1)
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_dataset_rejects_bad_shapes():
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), np.zeros((4, 1)))
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan]]), np.zeros((1, 1)))


def test_generator_shapes_and_determinism():
    f1 = gen_friedman1(100, 1.0, seed=3)
    assert (f1.n_rows, f1.n_features) == (100, 10)
    np.testing.assert_array_equal(f1.features, gen_friedman1(100, 1.0, seed=3).features)
    f2 = gen_friedman2(100, seed=3)
    assert f2.n_features == 4
    b = gen_blobs(90, 3, 5, seed=3)
    assert (b.n_outputs, b.n_features) == (3, 5)
    np.testing.assert_array_equal(np.bincount(b.labels), [30, 30, 30])
    np.testing.assert_array_equal(b.targets, gen_blobs(90, 3, 5, seed=3).targets)


def test_friedman1_noise_free_matches_formula():
    ds = gen_friedman1(50, 0.0, seed=2)
    x = ds.features
    y = (10 * np.sin(np.pi * x[:, 0] * x[:, 1]) + 20 * (x[:, 2] - 0.5) ** 2 + 10 * x[:, 3]
         + 5 * x[:, 4])
    np.testing.assert_allclose(ds.targets[:, 0], y, rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 60), reps=st.integers(1, 5), frac=st.floats(0.1, 0.9),
       seed=st.integers(0, 2**31))
def test_split_plans_partition(n, reps, frac, seed):
    assume(1 <= math.floor(frac * n) < n)
    plans = make_cv_plans(n, reps, frac, seed)
    assert len(plans) == reps
    for p in plans:
        assert len(p.train_indices) >= 1 and len(p.test_indices) >= 1
        both = np.concatenate([p.train_indices, p.test_indices])
        np.testing.assert_array_equal(np.sort(both), np.arange(n))
    again = make_cv_plans(n, reps, frac, seed)
    for a, b in zip(plans, again):
        np.testing.assert_array_equal(a.train_indices, b.train_indices)


def test_degenerate_split_rejected():
    with pytest.raises(DataError):
        make_cv_plans(2, 1, 0.25, 0)


def test_response_closed_forms():
    x1 = np.zeros((1, 10))
    x1[0, :3] = [0.5, 1.0, 0.5]
    assert friedman1_response(x1)[0] == pytest.approx(10.0, abs=1e-12)
    x2, x4 = 100.0, 2.0
    x = np.array([[37.0, x2, 1.0 / (x2 * x2 * x4), x4]])
    assert friedman2_response(x)[0] == pytest.approx(37.0, rel=1e-12)
