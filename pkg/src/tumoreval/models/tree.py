"""CART regression trees grown by SSE reduction.

A node is split only if it holds at least ``2 * min_leaf`` observations and
some threshold leaves ``min_leaf`` on each side with a positive SSE
reduction. Thresholds are midpoints between consecutive distinct feature
values; ties in gain go to the lowest feature index, then the smallest
threshold. With ``max_leaves`` set, nodes are expanded best-gain-first until
the leaf budget is exhausted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import FittedModel, check_training_data

__all__ = ["RegressionTree", "fit_tree", "best_split"]

MIN_LEAF_PRESETS = {"fine": 4, "medium": 12, "coarse": 36}


@dataclass
class _Split:
    gain: float
    feature: int
    threshold: float


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> _Split | None:
    """Best SSE-reducing split of one node, or ``None``."""
    n, p = X.shape
    if n < 2 * min_leaf:
        return None
    yc = y - y.mean()
    sse = float(yc @ yc)
    # numerically-zero gains do not justify a split
    floor = 1e-12 * sse
    best = None
    total = float(yc.sum())
    sizes = np.arange(1, n)
    valid_size = (sizes >= min_leaf) & (n - sizes >= min_leaf)
    for f in range(p):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left_sum = np.cumsum(yc[order])[:-1]
        right_sum = total - left_sum
        gain = left_sum ** 2 / sizes + right_sum ** 2 / (n - sizes) - total ** 2 / n
        ok = valid_size & (xs[1:] > xs[:-1])
        if not ok.any():
            continue
        gain = np.where(ok, gain, -np.inf)
        i = int(np.argmax(gain))
        g = float(gain[i])
        if g <= floor:
            continue
        if best is None or g > best.gain:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = float(xs[i])
            best = _Split(g, f, float(thr))
    return best


class RegressionTree(FittedModel):
    """Array-encoded binary tree; ``feature[k] == -1`` marks leaf ``k``."""

    family = "tree"

    def __init__(self, feature, threshold, left, right, value, n_features, hyperparams=None):
        super().__init__(n_features, hyperparams)
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            k = node[rows]
            go_left = X[rows, self.feature[k]] <= self.threshold[k]
            node[rows] = np.where(go_left, self.left[k], self.right[k])
            active = self.feature[node] >= 0
        return node

    def _predict(self, X):
        return self.value[self.apply(X)]

    def parameters(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_parameters(cls, n_features, hyperparams, params):
        return cls(
            params["feature"], params["threshold"], params["left"], params["right"],
            params["value"], n_features, hyperparams,
        )


def fit_tree(X, y, min_leaf: int = 12, max_leaves: int | None = None) -> RegressionTree:
    X, y = check_training_data(X, y, min_rows=1)
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if max_leaves is not None and max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")

    feature, threshold, left, right, value = [], [], [], [], []
    members: list[np.ndarray] = []
    splits: dict[int, _Split] = {}

    def add_node(idx: np.ndarray) -> int:
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        members.append(idx)
        s = best_split(X[idx], y[idx], min_leaf)
        if s is not None:
            splits[k] = s
        return k

    add_node(np.arange(X.shape[0]))
    n_leaves = 1
    while splits and (max_leaves is None or n_leaves < max_leaves):
        # largest gain first; equal gains resolve to the older node
        k = max(splits, key=lambda j: (splits[j].gain, -j))
        s = splits.pop(k)
        idx = members[k]
        go_left = X[idx, s.feature] <= s.threshold
        feature[k] = s.feature
        threshold[k] = s.threshold
        left[k] = add_node(idx[go_left])
        right[k] = add_node(idx[~go_left])
        n_leaves += 1

    hp = {"min_leaf": min_leaf, "max_leaves": max_leaves}
    return RegressionTree(feature, threshold, left, right, value, X.shape[1], hp)
