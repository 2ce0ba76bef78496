"""Tree ensembles: least-squares gradient boosting and bootstrap aggregation."""
from __future__ import annotations

import numpy as np

from .base import FittedModel, check_training_data
from .tree import RegressionTree, fit_tree

__all__ = ["BoostedTrees", "BaggedTrees", "fit_boosted", "fit_bagged"]


def _tree_params(trees):
    return [t.parameters() for t in trees]


def _trees_from(params, n_features):
    return [RegressionTree.from_parameters(n_features, {}, p) for p in params]


class BoostedTrees(FittedModel):
    """``F(x) = F0 + learn_rate * sum_m tree_m(x)``."""

    family = "boosted"

    def __init__(self, f0, learn_rate, trees, n_features, hyperparams=None, train_sse=None):
        super().__init__(n_features, hyperparams)
        self.f0 = float(f0)
        self.learn_rate = float(learn_rate)
        self.trees = list(trees)
        self.train_sse = list(train_sse or [])

    def _predict(self, X):
        out = np.full(X.shape[0], self.f0)
        for t in self.trees:
            out += self.learn_rate * t.predict(X)
        return out

    def parameters(self):
        return {"f0": self.f0, "learn_rate": self.learn_rate, "trees": _tree_params(self.trees)}

    @classmethod
    def from_parameters(cls, n_features, hyperparams, params):
        trees = _trees_from(params["trees"], n_features)
        return cls(params["f0"], params["learn_rate"], trees, n_features, hyperparams)


def fit_boosted(X, y, n_stages: int = 30, learn_rate: float = 0.1, min_leaf: int = 8,
                max_leaves: int = 16) -> BoostedTrees:
    """Least-squares boosting: each stage fits a small tree to the current residuals.

    ``train_sse[m]`` on the result is the training SSE after ``m`` stages.
    """
    X, y = check_training_data(X, y)
    if n_stages < 0:
        raise ValueError("n_stages must be >= 0")
    if not learn_rate > 0:
        raise ValueError("learn_rate must be positive")
    f0 = float(y.mean())
    F = np.full(y.shape[0], f0)
    sse = [float(np.sum((y - F) ** 2))]
    trees = []
    for _ in range(n_stages):
        tree = fit_tree(X, y - F, min_leaf=min_leaf, max_leaves=max_leaves)
        F = F + learn_rate * tree.predict(X)
        trees.append(tree)
        sse.append(float(np.sum((y - F) ** 2)))
    hp = {"n_stages": n_stages, "learn_rate": learn_rate, "min_leaf": min_leaf, "max_leaves": max_leaves}
    return BoostedTrees(f0, learn_rate, trees, X.shape[1], hp, sse)


class BaggedTrees(FittedModel):
    """Mean prediction of trees grown on bootstrap resamples."""

    family = "bagged"

    def __init__(self, trees, n_features, hyperparams=None):
        super().__init__(n_features, hyperparams)
        self.trees = list(trees)

    def member_predictions(self, X) -> np.ndarray:
        return np.stack([t.predict(X) for t in self.trees])

    def _predict(self, X):
        return np.mean(self.member_predictions(X), axis=0)

    def parameters(self):
        return {"trees": _tree_params(self.trees)}

    @classmethod
    def from_parameters(cls, n_features, hyperparams, params):
        return cls(_trees_from(params["trees"], n_features), n_features, hyperparams)


def fit_bagged(X, y, n_trees: int = 30, min_leaf: int = 8, seed: int = 0,
               bootstrap: bool = True) -> BaggedTrees:
    X, y = check_training_data(X, y)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    trees = []
    for _ in range(n_trees):
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(fit_tree(X[idx], y[idx], min_leaf=min_leaf))
    hp = {"n_trees": n_trees, "min_leaf": min_leaf, "seed": seed, "bootstrap": bootstrap}
    return BaggedTrees(trees, X.shape[1], hp)
