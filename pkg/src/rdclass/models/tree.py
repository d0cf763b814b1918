"""Greedy CART with Gini (classification) or squared-error (regression) splits.

Candidate thresholds are midpoints between consecutive distinct sorted values
of a feature; samples with ``x <= threshold`` go left. Equal-quality splits are
resolved toward the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

_TIE_ATOL = 1e-12
LEAF = -1


def gini(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p = float(np.mean(y))
    return 2.0 * p * (1.0 - p)


def sse(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    return float(np.sum((y - y.mean()) ** 2))


def _split_costs(vals: np.ndarray, ys: np.ndarray, criterion: str, min_leaf: int) -> np.ndarray:
    """Cost of cutting after each sorted position, shape (n-1, f); inf where invalid.

    Gini cost is the sample-weighted child impurity divided by n; the
    squared-error cost is the children's total SSE.
    """
    n = vals.shape[0]
    left_n = np.arange(1, n, dtype=np.float64)[:, None]
    right_n = n - left_n
    cum = np.cumsum(ys, axis=0)
    tot = cum[-1]
    left_sum = cum[:-1]
    right_sum = tot - left_sum
    if criterion == "gini":
        pl = left_sum / left_n
        pr = right_sum / right_n
        cost = (left_n * 2.0 * pl * (1.0 - pl) + right_n * 2.0 * pr * (1.0 - pr)) / n
    else:
        cum2 = np.cumsum(ys * ys, axis=0)
        left_sq = cum2[:-1]
        right_sq = cum2[-1] - left_sq
        cost = (left_sq - left_sum**2 / left_n) + (right_sq - right_sum**2 / right_n)
    valid = vals[1:] > vals[:-1]
    if min_leaf > 1:
        valid &= (left_n >= min_leaf) & (right_n >= min_leaf)
    return np.where(valid, cost, np.inf)


class CART:
    """Binary tree stored as flat node arrays.

    ``value`` holds the leaf output: class-1 frequency for Gini trees, or
    whatever ``leaf_value`` returns for regression trees (mean by default).
    """

    def __init__(
        self,
        max_depth: int | None = 8,
        min_leaf: int = 1,
        criterion: str = "gini",
        max_features: int | None = None,
        rng: np.random.Generator | None = None,
    ):
        if criterion not in ("gini", "mse"):
            raise ValueError(f"unknown criterion {criterion!r}")
        self.max_depth = max_depth
        self.min_leaf = max(1, int(min_leaf))
        self.criterion = criterion
        self.max_features = max_features
        self.rng = rng

    def fit(
        self,
        X: np.ndarray,
        y: np.ndarray,
        leaf_value: Callable[[np.ndarray], float] | None = None,
        presorted: np.ndarray | None = None,
    ) -> "CART":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = X.shape
        if self.max_features is not None and not 1 <= self.max_features <= d:
            raise ValueError(f"max_features={self.max_features} outside [1, {d}]")
        if self.max_features is not None and self.max_features < d and self.rng is None:
            raise ValueError("feature subsampling needs an rng")
        leaf_value = leaf_value or (lambda idx: float(y[idx].mean()))
        impurity = gini if self.criterion == "gini" else sse

        feature, threshold, left, right, value, count = [], [], [], [], [], []

        def new_node(idx):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(leaf_value(idx))
            count.append(idx.size)
            return len(feature) - 1

        root_idx = np.arange(n)
        stack = [(new_node(root_idx), root_idx, 0)]
        while stack:
            node, idx, depth = stack.pop()
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if idx.size < 2 * self.min_leaf or impurity(y[idx]) <= _TIE_ATOL:
                continue
            split = self._best_split(X, y, idx, presorted)
            if split is None:
                continue
            f, t = split
            go_left = X[idx, f] <= t
            li, ri = idx[go_left], idx[~go_left]
            feature[node], threshold[node] = f, t
            l_node, r_node = new_node(li), new_node(ri)
            left[node], right[node] = l_node, r_node
            # right pushed first so the left subtree is numbered first
            stack.append((r_node, ri, depth + 1))
            stack.append((l_node, li, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=np.float64)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value, dtype=np.float64)
        self.count_ = np.array(count, dtype=np.int64)
        self.n_features_ = d
        return self

    def _candidate_features(self, d: int) -> np.ndarray:
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        return np.sort(self.rng.choice(d, size=self.max_features, replace=False))

    def _best_split(self, X, y, idx, presorted):
        feats = self._candidate_features(X.shape[1])
        if presorted is not None:
            in_node = np.zeros(X.shape[0], dtype=bool)
            in_node[idx] = True
            cols = presorted[:, feats]
            order = cols.T[in_node[cols.T]].reshape(feats.size, idx.size).T
            vals = X[order, feats[None, :]]
            ys = y[order]
        else:
            sub = X[np.ix_(idx, feats)]
            local = np.argsort(sub, axis=0, kind="stable")
            vals = np.take_along_axis(sub, local, axis=0)
            ys = y[idx][local]
        cost = _split_costs(vals, ys, self.criterion, self.min_leaf)
        best = cost.min()
        if not np.isfinite(best):
            return None
        # column-major scan: lowest feature first, then lowest position
        hits = np.argwhere((cost <= best + _TIE_ATOL * max(1.0, abs(best))).T)
        j, pos = hits[0]
        lo, hi = vals[pos, j], vals[pos + 1, j]
        t = lo + (hi - lo) / 2.0
        if t >= hi:
            t = lo
        return int(feats[j]), float(t)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            internal = self.left_[node] != LEAF
            if not internal.any():
                return node
            f = np.where(internal, self.feature_[node], 0)
            go_left = X[rows, f] <= self.threshold_[node]
            nxt = np.where(go_left, self.left_[node], self.right_[node])
            node = np.where(internal, nxt, node)

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value_[self.apply(X)]

    @property
    def depth(self) -> int:
        depths = np.zeros(self.feature_.size, dtype=np.int64)
        for i in range(self.feature_.size):
            if self.left_[i] != LEAF:
                depths[self.left_[i]] = depths[self.right_[i]] = depths[i] + 1
        return int(depths.max()) if depths.size else 0

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.left_ == LEAF))

    def to_dict(self) -> dict:
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
            "count": self.count_.tolist(),
            "n_features": self.n_features_,
        }

    @classmethod
    def from_dict(cls, data: dict, **kwargs) -> "CART":
        tree = cls(**kwargs)
        tree.feature_ = np.array(data["feature"], dtype=np.int64)
        tree.threshold_ = np.array(data["threshold"], dtype=np.float64)
        tree.left_ = np.array(data["left"], dtype=np.int64)
        tree.right_ = np.array(data["right"], dtype=np.int64)
        tree.value_ = np.array(data["value"], dtype=np.float64)
        tree.count_ = np.array(data["count"], dtype=np.int64)
        tree.n_features_ = int(data["n_features"])
        return tree
