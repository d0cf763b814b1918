"""Decision tree, logistic regression, linear SVM and k-NN on feature vectors."""

from __future__ import annotations

import numpy as np

from rdclass.errors import ConfigError, DataError, TrainingError
from rdclass.models.base import Classifier, LabeledDataset, Standardizer, sigmoid
from rdclass.models.tree import CART


class DecisionTreeClassifier(Classifier):
    kind = "decision_tree"

    def __init__(self, max_depth: int | None = 8, min_leaf: int = 5):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y) -> "DecisionTreeClassifier":
        self.tree_ = CART(self.max_depth, self.min_leaf, "gini").fit(X, y)
        return self

    def score(self, X):
        return self.tree_.predict_value(X)

    def training_gini(self, X, y) -> float:
        """Sample-weighted Gini impurity of the leaves on (X, y)."""
        leaves = self.tree_.apply(X)
        y = np.asarray(y, dtype=np.float64)
        total = 0.0
        for leaf in np.unique(leaves):
            yl = y[leaves == leaf]
            p = yl.mean()
            total += yl.size * 2.0 * p * (1.0 - p)
        return total / y.size

    def hyperparameters(self):
        return {"max_depth": self.max_depth, "min_leaf": self.min_leaf}

    def parameters(self):
        return {"tree": self.tree_.to_dict()}

    @classmethod
    def restore(cls, hyperparameters, parameters):
        model = cls(**hyperparameters)
        model.tree_ = CART.from_dict(parameters["tree"])
        return model


def logistic_loss_and_grad(Z, y, w, b, l2):
    """Mean negative log-likelihood + (l2/2)|w|^2, and its gradient in (w, b)."""
    z = Z @ w + b
    # softplus(z) - y*z, computed without overflow
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = sigmoid(z) - y
    grad_w = Z.T @ r / y.size + l2 * w
    grad_b = float(np.mean(r))
    return loss, grad_w, grad_b


class LogisticRegression(Classifier):
    kind = "logistic_regression"

    def __init__(self, l2: float = 1e-3, epochs: int = 500, lr: float = 0.1):
        self.l2 = l2
        self.epochs = epochs
        self.lr = lr

    def fit(self, X, y) -> "LogisticRegression":
        self.standardizer_ = Standardizer.fit(X)
        Z = self.standardizer_.transform(X)
        y = np.asarray(y, dtype=np.float64)
        w = np.zeros(Z.shape[1])
        b = 0.0
        history = []
        rising = 0
        for epoch in range(self.epochs):
            loss, gw, gb = logistic_loss_and_grad(Z, y, w, b, self.l2)
            if not np.isfinite(loss):
                raise TrainingError("logistic loss is not finite", {"epoch": epoch, "history": history[-10:]})
            if history and loss > history[-1]:
                rising += 1
                if rising >= 5:
                    raise TrainingError(
                        "logistic regression diverged (loss rose 5 epochs running)",
                        {"epoch": epoch, "lr": self.lr, "history": history[-10:]},
                    )
            else:
                rising = 0
            history.append(loss)
            w = w - self.lr * gw
            b = b - self.lr * gb
        self.loss_history_ = history
        self.coef_ = w
        self.intercept_ = b
        return self

    def decision_function(self, X):
        return self.standardizer_.transform(X) @ self.coef_ + self.intercept_

    def score(self, X):
        return sigmoid(self.decision_function(X))

    def hyperparameters(self):
        return {"l2": self.l2, "epochs": self.epochs, "lr": self.lr}

    def parameters(self):
        return {
            "standardization": self.standardizer_.to_dict(),
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
        }

    @classmethod
    def restore(cls, hyperparameters, parameters):
        model = cls(**hyperparameters)
        model.standardizer_ = Standardizer.from_dict(parameters["standardization"])
        model.coef_ = np.array(parameters["coef"], dtype=np.float64)
        model.intercept_ = float(parameters["intercept"])
        return model


class LinearSVM(Classifier):
    """Primal hinge-loss SVM trained by mini-batch Pegasos.

    Objective: (lam/2)|w|^2 + mean hinge, lam = 1/(C N). The bias is the weight
    of a constant input column and is regularised along with w. Step t uses
    eta = 1/(lam t) followed by projection onto the ball of radius 1/sqrt(lam).
    The returned weights average the iterates of the second half of training.
    """

    kind = "linear_svm"

    def __init__(self, C: float = 1.0, epochs: int = 200, batch_size: int = 32, seed: int = 0):
        self.C = C
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y) -> "LinearSVM":
        self.standardizer_ = Standardizer.fit(X)
        Z = self.standardizer_.transform(X)
        Z = np.hstack([Z, np.ones((Z.shape[0], 1))])
        ys = np.where(np.asarray(y) > 0, 1.0, -1.0)
        n, d = Z.shape
        lam = 1.0 / (self.C * n)
        radius = 1.0 / np.sqrt(lam)
        k = min(self.batch_size, n)
        rng = np.random.default_rng(self.seed)
        w = np.zeros(d)
        avg = np.zeros(d)
        n_avg = 0
        t = 0
        steps_per_epoch = -(-n // k)
        start_avg = (self.epochs * steps_per_epoch) // 2
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            for s in range(0, n, k):
                batch = order[s : s + k]
                t += 1
                eta = 1.0 / (lam * t)
                margins = ys[batch] * (Z[batch] @ w)
                viol = margins < 1.0
                w = (1.0 - eta * lam) * w
                if viol.any():
                    w = w + (eta / batch.size) * (ys[batch][viol] @ Z[batch][viol])
                norm = np.sqrt(w @ w)
                if norm > radius:
                    w = w * (radius / norm)
                if not np.all(np.isfinite(w)):
                    raise TrainingError("SVM weights became non-finite", {"step": t, "epoch": epoch})
                if t > start_avg:
                    n_avg += 1
                    avg += (w - avg) / n_avg
        w = avg if n_avg else w
        self.lam_ = lam
        self.coef_ = w[:-1].copy()
        self.intercept_ = float(w[-1])
        return self

    def objective(self, X, y) -> float:
        Z = self.standardizer_.transform(X)
        ys = np.where(np.asarray(y) > 0, 1.0, -1.0)
        w = np.append(self.coef_, self.intercept_)
        hinge = np.maximum(0.0, 1.0 - ys * (Z @ self.coef_ + self.intercept_))
        return float(0.5 * self.lam_ * (w @ w) + hinge.mean())

    def decision_function(self, X):
        return self.standardizer_.transform(X) @ self.coef_ + self.intercept_

    def score(self, X):
        return sigmoid(self.decision_function(X))

    def hyperparameters(self):
        return {"C": self.C, "epochs": self.epochs, "batch_size": self.batch_size, "seed": self.seed}

    def parameters(self):
        return {
            "standardization": self.standardizer_.to_dict(),
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
            "lam": self.lam_,
        }

    @classmethod
    def restore(cls, hyperparameters, parameters):
        model = cls(**hyperparameters)
        model.standardizer_ = Standardizer.from_dict(parameters["standardization"])
        model.coef_ = np.array(parameters["coef"], dtype=np.float64)
        model.intercept_ = float(parameters["intercept"])
        model.lam_ = float(parameters["lam"])
        return model


class KNearestNeighbors(Classifier):
    """Majority vote of the k Euclidean-nearest training points (standardised).

    A tied vote goes to the nearest neighbour's label.
    """

    kind = "knn"

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y) -> "KNearestNeighbors":
        X = np.asarray(X, dtype=np.float64)
        if not 1 <= self.k <= X.shape[0]:
            raise ConfigError(f"k={self.k} must lie in [1, {X.shape[0]}]")
        self.standardizer_ = Standardizer.fit(X)
        self.train_ = self.standardizer_.transform(X)
        self.labels_ = np.asarray(y).astype(np.int64)
        return self

    def neighbors(self, X) -> np.ndarray:
        Q = self.standardizer_.transform(np.atleast_2d(X))
        out = np.empty((Q.shape[0], self.k), dtype=np.int64)
        for s in range(0, Q.shape[0], 64):
            diff = Q[s : s + 64, None, :] - self.train_[None, :, :]
            d2 = np.einsum("qnd,qnd->qn", diff, diff)
            # stable sort: equal distances resolve toward the lower training index
            out[s : s + 64] = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return out

    def _vote(self, X):
        nb = self.neighbors(X)
        votes = self.labels_[nb]
        human = votes.sum(axis=1)
        cls = np.where(2 * human > self.k, 1, 0)
        tied = 2 * human == self.k
        cls[tied] = votes[tied, 0]
        return cls, human / self.k

    def score(self, X):
        return self._vote(X)[1]

    def predict(self, X):
        return self._vote(X)[0].astype(np.int64)

    def predict_one(self, x):
        cls, score = self._vote(np.asarray(x, dtype=np.float64)[None, :])
        return int(cls[0]), float(score[0])

    def hyperparameters(self):
        return {"k": self.k}

    def parameters(self):
        return {
            "standardization": self.standardizer_.to_dict(),
            "train": self.train_.tolist(),
            "labels": self.labels_.tolist(),
        }

    @classmethod
    def restore(cls, hyperparameters, parameters):
        model = cls(**hyperparameters)
        model.standardizer_ = Standardizer.from_dict(parameters["standardization"])
        model.train_ = np.array(parameters["train"], dtype=np.float64)
        model.labels_ = np.array(parameters["labels"], dtype=np.int64)
        return model


def _require_data(data: LabeledDataset) -> LabeledDataset:
    if not isinstance(data, LabeledDataset):
        raise DataError("expected a LabeledDataset")
    return data


def fit_decision_tree(data: LabeledDataset, max_depth: int | None = 8, min_leaf: int = 5) -> DecisionTreeClassifier:
    data = _require_data(data)
    return DecisionTreeClassifier(max_depth, min_leaf).fit(data.features, data.labels)


def fit_logistic_regression(data: LabeledDataset, l2: float = 1e-3, epochs: int = 500, lr: float = 0.1) -> LogisticRegression:
    data = _require_data(data)
    return LogisticRegression(l2, epochs, lr).fit(data.features, data.labels)


def fit_linear_svm(data: LabeledDataset, C: float = 1.0, epochs: int = 200, seed: int = 0) -> LinearSVM:
    data = _require_data(data)
    return LinearSVM(C, epochs, seed=seed).fit(data.features, data.labels)


def fit_knn(data: LabeledDataset, k: int = 5) -> KNearestNeighbors:
    data = _require_data(data)
    return KNearestNeighbors(k).fit(data.features, data.labels)
