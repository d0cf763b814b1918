"""Independent reference implementations used as test oracles.

They favour brute force and direct formulas over speed, and share no code
with the package.
"""

from itertools import combinations

import numpy as np


def otsu_exhaustive(hist, k, rtol=1e-9):
    """Score every threshold tuple by sum_i w_i (mu_i - mu)^2.

    Ties within ``rtol`` resolve to the lexicographically smallest tuple.
    """
    hist = np.asarray(hist, dtype=np.float64)
    n = hist.size
    p = hist / hist.sum()
    levels = np.arange(n)
    mu = float(np.sum(p * levels))
    cuts = np.array(list(combinations(range(1, n), k)), dtype=np.int64)  # lexicographic order
    edges = np.hstack([np.zeros((len(cuts), 1), np.int64), cuts, np.full((len(cuts), 1), n)])
    # per-bin class membership, summed directly rather than via prefix tables
    var = np.zeros(len(cuts))
    for c in range(k + 1):
        inside = (levels[None, :] >= edges[:, c : c + 1]) & (levels[None, :] < edges[:, c + 1 : c + 2])
        w = inside @ p
        s = inside @ (p * levels)
        m = np.divide(s, w, out=np.zeros_like(s), where=w > 0)
        var += np.where(w > 0, w * (m - mu) ** 2, 0.0)
    best = var.max()
    return tuple(int(t) for t in cuts[np.argmax(var >= best - rtol * abs(best))])


def gini(y):
    if len(y) == 0:
        return 0.0
    p = np.mean(y)
    return 2 * p * (1 - p)


def greedy_cart_depth2(X, y, min_leaf=1):
    """Brute-force greedy CART to depth 2 on the midpoint grid.

    Returns the weighted training Gini of the leaves. Each node tries every
    (feature, midpoint) pair and keeps the lowest weighted child impurity;
    ties go to the lower feature, then the lower threshold.
    """

    def best_split(idx):
        best = None
        if gini(y[idx]) == 0:
            return None
        for f in range(X.shape[1]):
            vals = np.unique(X[idx, f])
            for lo, hi in zip(vals[:-1], vals[1:]):
                t = (lo + hi) / 2
                left, right = idx[X[idx, f] <= t], idx[X[idx, f] > t]
                if len(left) < min_leaf or len(right) < min_leaf:
                    continue
                cost = len(left) * gini(y[left]) + len(right) * gini(y[right])
                if best is None or cost < best[0] - 1e-12:
                    best = (cost, f, t, left, right)
        return best

    def grow(idx, depth):
        split = best_split(idx) if depth < 2 else None
        if split is None:
            return len(idx) * gini(y[idx])
        return grow(split[3], depth + 1) + grow(split[4], depth + 1)

    return grow(np.arange(len(y)), 0) / len(y)


def all_depth2_trees_min_gini(X, y):
    """Lowest training Gini over every tree of depth <= 2 (non-greedy)."""
    n = len(y)
    grid = []
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        grid += [(f, (a + b) / 2) for a, b in zip(vals[:-1], vals[1:])]

    def leaf_cost(mask):
        return mask.sum() * gini(y[mask])

    def best_subtree(mask):
        best = leaf_cost(mask)
        for f, t in grid:
            left = mask & (X[:, f] <= t)
            right = mask & ~(X[:, f] <= t)
            if left.any() and right.any():
                best = min(best, leaf_cost(left) + leaf_cost(right))
        return best

    best = leaf_cost(np.ones(n, bool))
    for f, t in grid:
        left = X[:, f] <= t
        best = min(best, best_subtree(left) + best_subtree(~left))
    return best / n


def knn_vote(X, y, q, k):
    d = [float(np.sqrt(np.sum((np.asarray(x) - q) ** 2))) for x in X]
    order = sorted(range(len(X)), key=lambda i: (d[i], i))[:k]
    votes = [y[i] for i in order]
    ones = sum(votes)
    if ones * 2 == k:
        return y[order[0]]
    return int(ones * 2 > k)


def adam_reference(theta0, grad, steps, lr=0.1, b1=0.9, b2=0.999, eps=1e-8):
    theta, m, v = theta0, 0.0, 0.0
    traj = []
    for t in range(1, steps + 1):
        g = grad(theta)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        theta = theta - lr * mh / (vh**0.5 + eps)
        traj.append(theta)
    return traj


def weighted_moments(rows, cols, w):
    w = np.asarray(w, float) / np.sum(w)
    mr = sum(wi * r for wi, r in zip(w, rows))
    mc = sum(wi * c for wi, c in zip(w, cols))
    vr = sum(wi * (r - mr) ** 2 for wi, r in zip(w, rows))
    vc = sum(wi * (c - mc) ** 2 for wi, c in zip(w, cols))
    cov = sum(wi * (r - mr) * (c - mc) for wi, r, c in zip(w, rows, cols))
    return mr, mc, vr, vc, cov


def isotonic_fit(y):
    """Pool-adjacent-violators least-squares non-decreasing fit."""
    blocks = []  # (mean, weight)
    for v in map(float, y):
        blocks.append([v, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    out = []
    for m, w in blocks:
        out += [m] * w
    return out
