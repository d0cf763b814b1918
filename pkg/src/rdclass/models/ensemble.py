"""Random forest (bagging) and gradient boosting (binomial deviance) over CART."""

from __future__ import annotations

import math

import numpy as np

from rdclass.errors import ConfigError
from rdclass.models.base import Classifier, LabeledDataset, sigmoid
from rdclass.models.tree import CART

NEWTON_CLAMP = 4.0


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, size=n)


class RandomForest(Classifier):
    """K Gini trees on bootstrap draws, m random candidate features per split.

    The score is the plain mean of the trees' leaf class frequencies. Tree k
    draws from its own substream ``SeedSequence([seed, k])``.
    """

    kind = "random_forest"

    def __init__(
        self,
        n_trees: int = 100,
        max_features: int | None = None,
        max_depth: int | None = None,
        min_leaf: int = 1,
        bootstrap: bool = True,
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        if self.n_trees < 1:
            raise ConfigError("a forest needs at least one tree")
        m = self.max_features if self.max_features is not None else max(1, math.isqrt(d))
        if not 1 <= m <= d:
            raise ConfigError(f"max_features={m} must lie in [1, {d}]")
        self.max_features_ = m
        self.trees_ = []
        for k in range(self.n_trees):
            rng = tree_rng(self.seed, k)
            idx = bootstrap_indices(n, rng) if self.bootstrap else np.arange(n)
            tree = CART(self.max_depth, self.min_leaf, "gini", m, rng)
            self.trees_.append(tree.fit(X[idx], y[idx]))
        return self

    def tree_scores(self, X) -> np.ndarray:
        return np.stack([tree.predict_value(X) for tree in self.trees_])

    def score(self, X):
        return np.mean(self.tree_scores(X), axis=0)

    def hyperparameters(self):
        return {
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }

    def parameters(self):
        return {"max_features": self.max_features_, "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def restore(cls, hyperparameters, parameters):
        model = cls(**hyperparameters)
        model.max_features_ = int(parameters["max_features"])
        model.trees_ = [CART.from_dict(t) for t in parameters["trees"]]
        return model


def binomial_deviance(y: np.ndarray, F: np.ndarray) -> float:
    """Mean of -2 log-likelihood for logits F."""
    return float(2.0 * np.mean(np.logaddexp(0.0, F) - y * F))


class GradientBoosting(Classifier):
    """Binomial-deviance gradient boosting with one Newton step per leaf.

    F0 is the prior log-odds (clamped to +-4). Stage k fits a squared-error
    regression tree to the residuals y - sigmoid(F); each leaf then takes
    sum(residual) / sum(p (1 - p)) over its samples, clamped to +-4, and F
    moves by ``learning_rate`` times the tree output.
    """

    kind = "gradient_boosting"

    def __init__(
        self,
        n_stages: int = 200,
        max_depth: int = 3,
        learning_rate: float = 0.1,
        min_leaf: int = 1,
        seed: int = 0,
    ):
        self.n_stages = n_stages
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y) -> "GradientBoosting":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        prior = float(y.mean())
        if prior <= 0.0 or prior >= 1.0:
            self.init_ = NEWTON_CLAMP if prior >= 1.0 else -NEWTON_CLAMP
            self.trees_ = []
            self.deviance_ = [binomial_deviance(y, np.full(y.size, self.init_))]
            return self
        self.init_ = float(np.clip(math.log(prior / (1.0 - prior)), -NEWTON_CLAMP, NEWTON_CLAMP))
        F = np.full(y.size, self.init_)
        presorted = np.argsort(X, axis=0, kind="stable")
        self.trees_ = []
        self.deviance_ = [binomial_deviance(y, F)]
        for _ in range(self.n_stages):
            p = sigmoid(F)
            residual = y - p
            hess = p * (1.0 - p)

            def newton(idx, residual=residual, hess=hess):
                den = hess[idx].sum()
                if den <= 1e-12:
                    return 0.0
                return float(np.clip(residual[idx].sum() / den, -NEWTON_CLAMP, NEWTON_CLAMP))

            tree = CART(self.max_depth, self.min_leaf, "mse").fit(X, residual, newton, presorted)
            self.trees_.append(tree)
            F = F + self.learning_rate * tree.predict_value(X)
            self.deviance_.append(binomial_deviance(y, F))
        return self

    def staged_decision(self, X):
        """Yield the logit after F0 and after each stage."""
        F = np.full(np.asarray(X).shape[0], self.init_)
        yield F
        for tree in self.trees_:
            F = F + self.learning_rate * tree.predict_value(X)
            yield F

    def decision_function(self, X):
        F = None
        for F in self.staged_decision(X):
            pass
        return F

    def score(self, X):
        return sigmoid(self.decision_function(X))

    def hyperparameters(self):
        return {
            "n_stages": self.n_stages,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
            "seed": self.seed,
        }

    def parameters(self):
        return {"init": self.init_, "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def restore(cls, hyperparameters, parameters):
        model = cls(**hyperparameters)
        model.init_ = float(parameters["init"])
        model.trees_ = [CART.from_dict(t) for t in parameters["trees"]]
        return model


def fit_random_forest(data: LabeledDataset, K: int = 100, m: int | None = None,
                      max_depth: int | None = None, seed: int = 0, bootstrap: bool = True) -> RandomForest:
    return RandomForest(K, m, max_depth, 1, bootstrap, seed).fit(data.features, data.labels)


def fit_gradient_boosting(data: LabeledDataset, K: int = 200, depth: int = 3, nu: float = 0.1,
                          seed: int = 0) -> GradientBoosting:
    return GradientBoosting(K, depth, nu, 1, seed).fit(data.features, data.labels)
