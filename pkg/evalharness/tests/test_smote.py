import numpy as np
import pytest

from flare_eval.smote import smote_oversample


def two_class(seed=0, n_major=100, n_minor=10):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_major, 2)), rng.normal((5, 5), 0.5, (n_minor, 2))])
    y = np.array(["a"] * n_major + ["b"] * n_minor)
    return X, y


def test_balanced_input_unchanged():
    X, y = two_class(n_major=20, n_minor=20)
    X2, y2 = smote_oversample(X, y, seed=1)
    assert len(X2) == len(X) and np.array_equal(np.sort(y2), np.sort(y))


def test_minority_grown_to_majority():
    X, y = two_class()
    X2, y2 = smote_oversample(X, y, seed=1)
    values, counts = np.unique(y2, return_counts=True)
    assert counts.tolist() == [100, 100]
    assert len(X2) == 200


def test_synthetic_points_inside_minority_bounding_box():
    X, y = two_class()
    X2, y2 = smote_oversample(X, y, seed=3)
    minority = X[y == "b"]
    synthetic = X2[len(X):]
    assert np.all(y2[len(X):] == "b")
    lo, hi = minority.min(axis=0), minority.max(axis=0)
    assert np.all(synthetic >= lo - 1e-12) and np.all(synthetic <= hi + 1e-12)


def test_deterministic_per_seed():
    X, y = two_class()
    a = smote_oversample(X, y, seed=9)
    b = smote_oversample(X, y, seed=9)
    c = smote_oversample(X, y, seed=10)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[0], c[0])


def test_multiclass_all_grown():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(70, 3))
    y = np.array(["a"] * 40 + ["b"] * 20 + ["c"] * 10)
    _, y2 = smote_oversample(X, y, seed=0)
    _, counts = np.unique(y2, return_counts=True)
    assert counts.tolist() == [40, 40, 40]


def test_tiny_minority_rejected():
    X = np.vstack([np.zeros((5, 2)), np.ones((1, 2))])
    y = np.array(["a"] * 5 + ["b"])
    with pytest.raises(ValueError):
        smote_oversample(X, y, seed=0)
