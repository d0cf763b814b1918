"""Model files: versioned JSON.

Layout::

    {"format": "rdclass-model", "version": 1, "kind": ...,
     "input": {"type": "features" | "profile" | "image", "buffer_size": b},
     "hyperparameters": {...}, "parameters": {...}}

Floats are written with ``repr`` precision, so load -> predict reproduces
the pre-save predictions bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

from rdclass.convnet import ConvNetClassifier
from rdclass.errors import DataError
from rdclass.models.base import Classifier
from rdclass.models.classical import DecisionTreeClassifier, KNearestNeighbors, LinearSVM, LogisticRegression
from rdclass.models.ensemble import GradientBoosting, RandomForest

FORMAT = "rdclass-model"
VERSION = 1
INPUT_TYPES = ("features", "profile", "image")

REGISTRY: dict[str, type[Classifier]] = {
    cls.kind: cls
    for cls in (
        DecisionTreeClassifier,
        LogisticRegression,
        LinearSVM,
        KNearestNeighbors,
        RandomForest,
        GradientBoosting,
        ConvNetClassifier,
    )
}

# the input each kind is trained on unless told otherwise
DEFAULT_INPUT = {
    "decision_tree": "features",
    "logistic_regression": "features",
    "linear_svm": "features",
    "knn": "features",
    "random_forest": "profile",
    "gradient_boosting": "profile",
    "convnet": "image",
}


def model_document(model: Classifier, input_type: str | None = None, buffer_size: int = 1) -> dict:
    input_type = input_type or DEFAULT_INPUT[model.kind]
    if input_type not in INPUT_TYPES:
        raise DataError(f"unknown input type {input_type!r}")
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "input": {"type": input_type, "buffer_size": int(buffer_size)},
        "hyperparameters": model.hyperparameters(),
        "parameters": model.parameters(),
    }


def save_model(path: str | Path, model: Classifier, input_type: str | None = None, buffer_size: int = 1) -> None:
    doc = model_document(model, input_type, buffer_size)
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def model_from_document(doc: dict) -> tuple[Classifier, dict]:
    if doc.get("format") != FORMAT:
        raise DataError("not an rdclass model file")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported model file version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind not in REGISTRY:
        raise DataError(f"unknown model kind {kind!r}")
    model = REGISTRY[kind].restore(doc["hyperparameters"], doc["parameters"])
    return model, dict(doc["input"])


def load_model(path: str | Path) -> tuple[Classifier, dict]:
    """Returns (model, input spec)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    return model_from_document(doc)
