import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorcascade.classifiers import (
    ModelSpec,
    fold_assignment,
    fold_consistency,
    forest_fit,
    forest_predict,
    kfold_cv,
    knn_fit,
    knn_predict,
    loss_and_grad,
    mlp_fit,
    mlp_predict,
    model_from_json,
    model_to_json,
    standardize_apply,
    standardize_fit,
    train_model,
)
from rotorcascade.classifiers.cv import StratificationWarning
from rotorcascade.classifiers.forest import gini
from rotorcascade.classifiers.mlp import init_params
from rotorcascade.classifiers.standardize import ConstantFeatureWarning
from rotorcascade.errors import (
    DivergenceError,
    FeatureMismatchError,
    InvalidInputError,
    InvalidLabelsError,
)
from rotorcascade.features import FeatureMatrix


def matrix(values, labels=None, names=None, machines=None, stamps=None):
    values = np.asarray(values, dtype=float)
    n, k = values.shape
    names = names or [f"f{j}" for j in range(k)]
    machines = machines or ["M1"] * n
    stamps = np.arange(n, dtype=float) if stamps is None else stamps
    return FeatureMatrix(names, values, machines, stamps, labels)


def separable(n=120, k=6, seed=0):
    """Feature 0 alone separates the classes; the rest is noise."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, k))
    X[:, 0] = np.where(y == 1, 5.0, -5.0) + rng.normal(scale=0.5, size=n)
    return X, y


# standardization

def test_standardize_column():
    m = matrix([[1.0], [2.0], [3.0]])
    std = standardize_fit(m)
    z = standardize_apply(std, m).values[:, 0]
    assert z.mean() == pytest.approx(0.0, abs=1e-15)
    assert z.std() == pytest.approx(1.0)
    assert std.apply([[4.0]])[0, 0] == pytest.approx(2.4495, abs=1e-4)
    assert std.apply([[4.0]])[0, 0] == pytest.approx(2.0 / np.sqrt(2.0 / 3.0), rel=1e-12)


def test_standardize_constant_column_passes_through():
    m = matrix([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
    with pytest.warns(ConstantFeatureWarning):
        std = standardize_fit(m)
    out = std.apply([[5.0, 2.0], [7.0, 2.0]])
    assert out[0, 0] == 5.0 and out[1, 0] == 7.0


def test_standardize_rejects_empty():
    with pytest.raises(InvalidInputError):
        standardize_fit(matrix(np.zeros((0, 2))))


# knn

def test_knn_memorizes_with_k1():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    y = rng.integers(0, 3, size=50)
    assert np.array_equal(knn_predict(knn_fit(X, y, k=1), X), y)


def test_knn_tie_goes_to_nearest_class():
    X = np.array([[1.0], [-1.0]])
    state = knn_fit(X, [0, 1], k=2)
    # equidistant: training order decides which neighbour is nearest
    assert knn_predict(state, [[0.0]])[0] == 0
    state = knn_fit(X[::-1], [1, 0], k=2)
    assert knn_predict(state, [[0.0]])[0] == 1
    # vote tie with a strictly nearer neighbour
    state = knn_fit(np.array([[0.4], [-1.0]]), [1, 0], k=2)
    assert knn_predict(state, [[0.0]])[0] == 1


def test_knn_worked_example():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
    assert knn_predict(knn_fit(X, [0, 0, 1], k=3), [[2.0, 0.0]])[0] == 0


def test_knn_k_too_large():
    with pytest.raises(InvalidInputError):
        knn_fit(np.zeros((3, 1)), [0, 1, 0], k=4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_knn_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, size=40)
    Q = rng.normal(size=(15, 3))
    perm = rng.permutation(40)
    a = knn_predict(knn_fit(X, y, k=5), Q)
    b = knn_predict(knn_fit(X[perm], y[perm], k=5), Q)
    assert np.array_equal(a, b)


# forest

def test_gini_values():
    assert gini(np.array([5, 5])) == pytest.approx(0.5)
    assert gini(np.array([10, 0])) == 0.0


def test_forest_importances_and_accuracy():
    X, y = separable()
    state = forest_fit(X, y, n_trees=30, seed=1)
    imp = state["importances"]
    assert abs(imp.sum() - 1.0) <= 1e-9
    assert np.argmax(imp) == 0
    assert np.mean(forest_predict(state, X) == y) >= 0.95


def test_forest_constant_feature_never_splits():
    X, y = separable()
    X[:, 3] = 2.0
    assert forest_fit(X, y, n_trees=20, seed=0)["importances"][3] == 0.0


def test_forest_deterministic_and_single_class():
    X, y = separable(60)
    a = forest_fit(X, y, n_trees=10, seed=5)
    b = forest_fit(X, y, n_trees=10, seed=5)
    assert np.array_equal(a["importances"], b["importances"])
    with pytest.raises(InvalidLabelsError):
        forest_fit(X, np.zeros(60, dtype=int))


# mlp

def _numeric_grad(params, X, Y, key, eps=1e-5):
    grad = np.zeros_like(params[key])
    it = np.nditer(params[key], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = params[key][idx]
        params[key][idx] = orig + eps
        up, _ = loss_and_grad(params, X, Y)
        params[key][idx] = orig - eps
        down, _ = loss_and_grad(params, X, Y)
        params[key][idx] = orig
        grad[idx] = (up - down) / (2 * eps)
    return grad


def test_mlp_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 4))
    Y = np.eye(3)[[0, 1, 2, 1, 0]]
    params = init_params(4, 6, 3, rng)
    _, grads = loss_and_grad(params, X, Y)
    worst = 0.0
    for key in params:
        num = _numeric_grad(params, X, Y, key)
        denom = np.maximum(np.abs(num) + np.abs(grads[key]), 1e-8)
        worst = max(worst, float(np.max(np.abs(num - grads[key]) / denom)))
    assert worst <= 1e-4


def test_mlp_learns_xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    y = np.array([0, 1, 1, 0])
    state = mlp_fit(X, y, hidden=8, epochs=5000, lr=0.5, seed=0)
    assert np.array_equal(mlp_predict(state, X), y)


def test_mlp_zero_epochs_gives_valid_labels():
    X, y = separable(20)
    a = mlp_predict(mlp_fit(X, y, epochs=0, seed=3), X)
    b = mlp_predict(mlp_fit(X, y, epochs=0, seed=3), X)
    assert set(a) <= {0, 1} and np.array_equal(a, b)


def test_mlp_divergence_is_reported():
    X, y = separable(20)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(DivergenceError):
            mlp_fit(X, y, epochs=20, lr=1e308)


# trained models

def test_trained_model_round_trip_and_mismatch():
    X, y = separable(60)
    m = matrix(X, y)
    for algo in ("knn", "forest", "mlp"):
        model = train_model(ModelSpec(algo, {"n_trees": 5} if algo == "forest" else {}), m, seed=2)
        text = model_to_json(model)
        back = model_from_json(text)
        assert model_to_json(back) == text
        assert np.array_equal(back.predict(m), model.predict(m))
    with pytest.raises(FeatureMismatchError):
        model.predict(matrix(X[:, :3]))
    with pytest.raises(FeatureMismatchError):
        model.predict_row(["f1", "f0"], [0.0, 0.0])


def test_train_model_rejects_bad_inputs():
    X, y = separable(20)
    with pytest.raises(InvalidLabelsError):
        train_model(ModelSpec("knn"), matrix(X, np.zeros(20, dtype=int)))
    with pytest.raises(InvalidInputError):
        ModelSpec("svm")
    with pytest.raises(InvalidInputError):
        train_model(ModelSpec("knn", {"depth": 3}), matrix(X, y))
    X[0, 0] = np.nan
    with pytest.raises(InvalidInputError):
        train_model(ModelSpec("knn"), matrix(X, y))


# cross-validation

def test_fold_assignment_partition():
    labels = np.repeat([0, 1, 2], [50, 30, 20])
    folds = fold_assignment(labels, k=5, seed=1)
    assert [f.size for f in folds] == [20] * 5
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(100))
    for f in folds:
        assert np.array_equal(np.bincount(labels[f]), [10, 6, 4])
    again = fold_assignment(labels, k=5, seed=1)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))


def test_fold_assignment_small_class_warns():
    labels = np.array([0] * 20 + [1] * 3)
    with pytest.warns(StratificationWarning):
        folds = fold_assignment(labels, k=5)
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(23))


def test_fold_consistency_orders_by_time():
    pred = [1, 0, 0, 1]
    truth = [0, 0, 0, 0]
    # time order gives 0,0,1,1: one jump in three pairs
    assert fold_consistency(pred, truth, ["M1"] * 4, [3.0, 1.0, 2.0, 4.0]) == pytest.approx(2 / 3)


def test_kfold_cv_separable():
    X, y = separable(100)
    m = matrix(X, y)
    rep = kfold_cv(m, spec=ModelSpec("forest", {"n_trees": 20}), k=5, seed=0)
    assert len(rep.fold_accuracy) == 5
    assert rep.mean_accuracy >= 0.95
    global_mean = m.values.mean(axis=0)
    assert all(not np.allclose(mu, global_mean) for mu in rep.fold_standardizer_means)


def test_kfold_needs_enough_rows():
    X, y = separable(4)
    with pytest.raises(InvalidInputError):
        kfold_cv(matrix(X, y), spec=ModelSpec("knn"), k=5)


@pytest.mark.parametrize("algo", ["knn", "forest", "mlp"])
def test_learners_are_deterministic(algo):
    X, y = separable(60)
    m = matrix(X, y)
    spec = ModelSpec(algo, {"n_trees": 5} if algo == "forest" else {"epochs": 50} if algo == "mlp" else {})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert model_to_json(train_model(spec, m, seed=9)) == model_to_json(train_model(spec, m, seed=9))
