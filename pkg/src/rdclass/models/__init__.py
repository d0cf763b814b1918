"""Classifiers behind one ``score``/``predict`` contract."""

from rdclass.models.base import Classifier, LabeledDataset, Standardizer
from rdclass.models.classical import (
    DecisionTreeClassifier,
    KNearestNeighbors,
    LinearSVM,
    LogisticRegression,
    fit_decision_tree,
    fit_knn,
    fit_linear_svm,
    fit_logistic_regression,
)
from rdclass.models.ensemble import GradientBoosting, RandomForest, fit_gradient_boosting, fit_random_forest

__all__ = [
    "Classifier",
    "LabeledDataset",
    "Standardizer",
    "DecisionTreeClassifier",
    "LogisticRegression",
    "LinearSVM",
    "KNearestNeighbors",
    "RandomForest",
    "GradientBoosting",
    "fit_decision_tree",
    "fit_logistic_regression",
    "fit_linear_svm",
    "fit_knn",
    "fit_random_forest",
    "fit_gradient_boosting",
]
