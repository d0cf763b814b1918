import numpy as np
import pytest

from oracles import all_depth2_trees_min_gini, greedy_cart_depth2, knn_vote
from rdclass.errors import ConfigError, DataError, TrainingError
from rdclass.models.base import LabeledDataset, Standardizer, sigmoid
from rdclass.models.classical import (
    DecisionTreeClassifier,
    KNearestNeighbors,
    LinearSVM,
    LogisticRegression,
    fit_decision_tree,
    fit_knn,
    fit_linear_svm,
    fit_logistic_regression,
    logistic_loss_and_grad,
)
from rdclass.models.io import model_document, model_from_document
from rdclass.models.tree import CART


def blobs(rng, n=100, d=3, sep=4.0):
    X = rng.standard_normal((n, d))
    y = (np.arange(n) % 2).astype(int)
    X[y == 1, 0] += sep
    return LabeledDataset(X, y)


# -- dataset plumbing ------------------------------------------------------------

def test_dataset_validation():
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(DataError):
        LabeledDataset(np.array([[np.nan]]), [1])
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((2, 2)), [0, 2])
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((2, 2)), [0])


def test_standardizer_constant_column():
    s = Standardizer.fit(np.array([[1.0, 5.0], [3.0, 5.0]]))
    assert s.scale.tolist() == [1.0, 1.0]
    assert s.transform(np.array([[2.0, 5.0]])).tolist() == [[0.0, 0.0]]


def test_sigmoid_extremes():
    out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert out.tolist() == [0.0, 0.5, 1.0]


# -- decision tree -----------------------------------------------------------------

def test_tree_single_clean_split():
    data = LabeledDataset(np.array([[1.0], [2.0], [4.0], [5.0]]), [0, 0, 1, 1])
    model = fit_decision_tree(data, max_depth=8, min_leaf=1)
    assert model.tree_.threshold_[0] == 3.0
    assert model.accuracy(data) == 1.0


def test_tree_constant_labels():
    data = LabeledDataset(np.random.default_rng(0).random((20, 3)), np.ones(20))
    model = fit_decision_tree(data)
    assert model.tree_.n_leaves == 1
    assert np.all(model.predict(np.random.default_rng(1).random((5, 3))) == 1)


def test_tree_depth2_matches_greedy_brute_force(rng):
    gaps = []
    for trial in range(10):
        X = np.round(rng.random((50, 2)) * 20) / 2  # coarse grid to provoke ties
        y = (rng.random(50) < 0.3 + 0.4 * (X[:, 0] > 5)).astype(int)
        model = DecisionTreeClassifier(max_depth=2, min_leaf=1).fit(X, y)
        got = model.training_gini(X, y)
        assert got == pytest.approx(greedy_cart_depth2(X, y), abs=1e-12)
        best = all_depth2_trees_min_gini(X, y)
        assert got >= best - 1e-12
        gaps.append(got - best)
    assert min(gaps) == pytest.approx(0.0, abs=1e-12)


def test_tree_tie_breaking_prefers_lower_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    model = DecisionTreeClassifier(max_depth=1, min_leaf=1).fit(X, [0, 0, 1, 1])
    assert model.tree_.feature_[0] == 0 and model.tree_.threshold_[0] == 1.5


def test_tree_monotone_transform_invariance(rng):
    data = blobs(rng, 120, 3, 1.0)
    test = rng.standard_normal((50, 3)) * 2
    a = fit_decision_tree(data, 5, 2).predict(test)
    warped = LabeledDataset(np.exp(data.features) ** 3, data.labels)
    b = fit_decision_tree(warped, 5, 2).predict(np.exp(test) ** 3)
    assert np.array_equal(a, b)


def test_tree_respects_depth_and_min_leaf(rng):
    data = blobs(rng, 200, 4, 0.5)
    model = fit_decision_tree(data, max_depth=3, min_leaf=10)
    assert model.tree_.depth <= 3
    leaves = model.tree_.apply(data.features)
    assert np.bincount(leaves)[np.unique(leaves)].min() >= 10


def test_regression_tree_mse():
    X = np.arange(10.0)[:, None]
    y = np.where(X[:, 0] < 4, 1.0, 5.0)
    tree = CART(max_depth=1, criterion="mse").fit(X, y)
    assert tree.threshold_[0] == 3.5
    assert np.allclose(tree.predict_value(X), y)


# -- logistic regression -------------------------------------------------------------

def test_logistic_gradient_finite_differences(rng):
    Z = rng.standard_normal((40, 5))
    y = (rng.random(40) < 0.5).astype(float)
    w, b, l2 = rng.standard_normal(5), 0.3, 0.05
    _, gw, gb = logistic_loss_and_grad(Z, y, w, b, l2)
    h = 1e-6
    num = []
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        num.append((logistic_loss_and_grad(Z, y, w + e, b, l2)[0] - logistic_loss_and_grad(Z, y, w - e, b, l2)[0]) / (2 * h))
    num_b = (logistic_loss_and_grad(Z, y, w, b + h, l2)[0] - logistic_loss_and_grad(Z, y, w, b - h, l2)[0]) / (2 * h)
    analytic = np.append(gw, gb)
    numeric = np.append(num, num_b)
    assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-6


def test_logistic_separable(rng):
    data = blobs(rng, 100, 2, 8.0)
    model = fit_logistic_regression(data)
    assert model.accuracy(data) == 1.0
    assert np.all(np.diff(model.loss_history_) <= 1e-15)


def test_logistic_strong_regularisation_gives_prior(rng):
    X = rng.standard_normal((80, 3))
    y = np.r_[np.ones(20), np.zeros(60)].astype(int)
    X[y == 1] += 2
    model = fit_logistic_regression(LabeledDataset(X, y), l2=1e3, epochs=20000, lr=1e-3)
    assert np.abs(model.coef_).max() < 1e-3
    assert np.allclose(model.score(X), 0.25, atol=0.02)


def test_logistic_divergence_raises(rng):
    data = blobs(rng, 60, 2, 0.3)
    with pytest.raises(TrainingError) as info:
        fit_logistic_regression(data, l2=1.0, epochs=200, lr=50.0)
    assert "history" in info.value.diagnostics


# -- SVM -----------------------------------------------------------------------------------

def test_svm_two_points_bisector():
    # in standardised coordinates the points are (1, -1) and (-1, 1)
    X = np.array([[3.0, -6.0], [-3.0, 6.0]])
    model = LinearSVM(C=1.0, epochs=4000).fit(X, [1, 0])
    w = model.coef_ / np.linalg.norm(model.coef_)
    direction = np.array([1.0, -1.0]) / np.sqrt(2)
    assert np.linalg.norm(w - direction) < 1e-3
    assert abs(model.decision_function(np.zeros((1, 2)))[0]) < 1e-3


def test_svm_separable_zero_hinge(rng):
    data = blobs(rng, 80, 2, 10.0)
    model = fit_linear_svm(data, C=10.0, epochs=300)
    margins = np.where(data.labels == 1, 1, -1) * model.decision_function(data.features)
    assert model.accuracy(data) == 1.0
    assert np.mean(np.maximum(0, 1 - margins)) < 0.05


def test_svm_objective_close_to_long_run(rng):
    data = blobs(rng, 200, 4, 1.5)
    short = fit_linear_svm(data, epochs=200)
    long = fit_linear_svm(data, epochs=3000)
    a = short.objective(data.features, data.labels)
    b = long.objective(data.features, data.labels)
    assert abs(a - b) <= 0.02 * b


def test_svm_seeded(rng):
    data = blobs(rng, 60, 3, 1.0)
    a, b = fit_linear_svm(data, seed=3), fit_linear_svm(data, seed=3)
    assert np.array_equal(a.coef_, b.coef_)


# -- k-NN ----------------------------------------------------------------------------------

def test_knn_memorises(rng):
    data = blobs(rng, 60, 3, 0.0)
    assert fit_knn(data, 1).accuracy(data) == 1.0
    model = fit_knn(data, 1)
    assert model.predict_one(data.features[7])[0] == data.labels[7]


def test_knn_hand_built_set():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0], [6.0, 5.0]])
    y = np.array([1, 0, 0, 1, 1])
    model = KNearestNeighbors(3).fit(X, y)
    Z = model.standardizer_.transform(X)
    for q in ([0.2, 0.1], [4.0, 4.0], [0.9, 0.9], [3.0, 2.5]):
        zq = model.standardizer_.transform(np.array([q]))[0]
        assert model.predict(np.array([q]))[0] == knn_vote(Z, y, zq, 3)


def test_knn_even_tie_goes_to_nearest():
    X = np.array([[0.0], [1.0], [3.0], [4.0]])
    model = KNearestNeighbors(2).fit(X, [1, 0, 0, 1])
    assert model.predict(np.array([[0.4]]))[0] == 1
    assert model.predict(np.array([[0.6]]))[0] == 0


def test_knn_k_too_large():
    with pytest.raises(ConfigError):
        fit_knn(LabeledDataset(np.zeros((3, 1)), [0, 1, 0]), 5)


# -- shared contract ------------------------------------------------------------------------

@pytest.mark.parametrize("fit", [
    lambda d: fit_decision_tree(d, 4, 2),
    lambda d: fit_logistic_regression(d, epochs=50),
    lambda d: fit_linear_svm(d, epochs=20),
    lambda d: fit_knn(d, 3),
])
def test_round_trip_bit_identical(rng, fit):
    data = blobs(rng, 80, 4, 1.0)
    model = fit(data)
    import json

    doc = json.loads(json.dumps(model_document(model)))
    back, spec = model_from_document(doc)
    probe = rng.standard_normal((30, 4)) * 2
    assert np.array_equal(model.score(probe), back.score(probe))
    assert np.array_equal(model.predict(probe), back.predict(probe))
    assert spec == {"type": "features", "buffer_size": 1}


def test_standardisation_uses_training_stats_only(rng):
    data = blobs(rng, 50, 2, 1.0)
    model = fit_logistic_regression(data, epochs=10)
    before = model.score(data.features[:5])
    model.score(rng.standard_normal((100, 2)) * 1000)
    assert np.array_equal(model.standardizer_.mean, data.features.mean(axis=0))
    assert np.array_equal(before, model.score(data.features[:5]))


def test_predict_one_contract(rng):
    data = blobs(rng, 40, 2, 3.0)
    model = fit_logistic_regression(data, epochs=50)
    cls, score = model.predict_one(data.features[0])
    assert cls == int(score >= 0.5) and 0 <= score <= 1
