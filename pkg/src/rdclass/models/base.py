"""Shared model plumbing: datasets, standardisation, the classifier contract."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rdclass.errors import DataError


@dataclass
class LabeledDataset:
    features: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,) 1 = human, 0 = robot
    experiment_ids: np.ndarray = field(default=None)  # (N,)
    frame_indices: np.ndarray = field(default=None)  # (N,)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels).astype(np.int64).ravel()
        n = self.features.shape[0]
        if self.experiment_ids is None:
            self.experiment_ids = np.zeros(n, dtype=np.int64)
        if self.frame_indices is None:
            self.frame_indices = np.arange(n, dtype=np.int64)
        self.experiment_ids = np.asarray(self.experiment_ids, dtype=np.int64).ravel()
        self.frame_indices = np.asarray(self.frame_indices, dtype=np.int64).ravel()
        if n == 0:
            raise DataError("dataset is empty")
        if not (self.labels.size == self.experiment_ids.size == self.frame_indices.size == n):
            raise DataError("features, labels and ids disagree in length")
        if not np.all(np.isfinite(self.features)):
            raise DataError("dataset contains non-finite feature values")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise DataError("labels must be 0 (robot) or 1 (human)")

    def __len__(self) -> int:
        return self.labels.size

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, mask) -> "LabeledDataset":
        return LabeledDataset(
            self.features[mask], self.labels[mask], self.experiment_ids[mask], self.frame_indices[mask]
        )


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        return cls(np.array(data["mean"], dtype=np.float64), np.array(data["scale"], dtype=np.float64))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Classifier:
    """Binary classifier contract: ``score`` in [0, 1] is the human probability-like
    output and the class is ``score >= 0.5``."""

    kind = "abstract"

    def score(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.score(X) >= 0.5).astype(np.int64)

    def predict_one(self, x) -> tuple[int, float]:
        s = float(self.score(np.asarray(x, dtype=np.float64)[None, :])[0])
        return int(s >= 0.5), s

    def accuracy(self, data: LabeledDataset) -> float:
        return float(np.mean(self.predict(data.features) == data.labels))

    # serialisation hooks, see rdclass.models.io
    def hyperparameters(self) -> dict:
        return {}

    def parameters(self) -> dict:
        raise NotImplementedError

    @classmethod
    def restore(cls, hyperparameters: dict, parameters: dict) -> "Classifier":
        raise NotImplementedError
