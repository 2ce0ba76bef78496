"""Shared fit/predict contract for every regression family."""
from __future__ import annotations

from typing import Any, ClassVar

import numpy as np

from ..errors import DegenerateData, FeatureCountMismatch


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a 2D feature matrix, got shape {X.shape}")
    return X


def check_training_data(X, y, min_rows: int = 2) -> tuple[np.ndarray, np.ndarray]:
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] < min_rows:
        raise DegenerateData(f"need at least {min_rows} observations, got {X.shape[0]}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DegenerateData("training data contains NaN or infinite values")
    return X, y


class FittedModel:
    """A trained regressor. Subclasses set ``family`` and implement ``_predict``.

    ``parameters()``/``from_parameters()`` expose the fitted state as plain
    JSON-compatible values for persistence.
    """

    family: ClassVar[str] = ""

    def __init__(self, n_features: int, hyperparams: dict | None = None):
        self.n_features = int(n_features)
        self.hyperparams = dict(hyperparams or {})

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.n_features:
            raise FeatureCountMismatch(
                f"{self.family} model trained on {self.n_features} features, got {X.shape[1]}"
            )
        return self._predict(X)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self) -> dict[str, Any]:
        raise NotImplementedError

    @classmethod
    def from_parameters(cls, n_features: int, hyperparams: dict, params: dict) -> "FittedModel":
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n_features={self.n_features}, {self.hyperparams})"


def predict(model: FittedModel, X) -> np.ndarray:
    return model.predict(X)
