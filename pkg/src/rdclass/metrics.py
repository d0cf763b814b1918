"""Confusion matrices with human as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int  # human predicted human
    fp: int  # robot predicted human
    fn: int  # human predicted robot
    tn: int  # robot predicted robot

    @classmethod
    def from_predictions(cls, labels, predictions) -> "ConfusionMatrix":
        y = np.asarray(labels).astype(bool)
        p = np.asarray(predictions).astype(bool)
        return cls(int(np.sum(y & p)), int(np.sum(~y & p)), int(np.sum(y & ~p)), int(np.sum(~y & ~p)))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else float("nan")

    def rates(self) -> dict[str, float]:
        """Row-normalised rates: true class -> predicted class."""
        humans, robots = self.tp + self.fn, self.fp + self.tn
        div = lambda a, b: a / b if b else float("nan")  # noqa: E731
        return {
            "human_as_human": div(self.tp, humans),
            "human_as_robot": div(self.fn, humans),
            "robot_as_human": div(self.fp, robots),
            "robot_as_robot": div(self.tn, robots),
        }

    def format(self) -> str:
        r = self.rates()
        return (
            "true\\pred   human            robot\n"
            f"human       {self.tp:5d} ({r['human_as_human']:7.2%})  {self.fn:5d} ({r['human_as_robot']:7.2%})\n"
            f"robot       {self.fp:5d} ({r['robot_as_human']:7.2%})  {self.tn:5d} ({r['robot_as_robot']:7.2%})\n"
            f"accuracy    {self.accuracy:.4f} over {self.total} samples"
        )
