"""Versioned JSON persistence for fitted models.

Floats are written with ``repr`` precision, so a loaded model reproduces the
original predictions bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import IoFailure
from ..features import NormalizerParams
from .base import FittedModel
from .ensemble import BaggedTrees, BoostedTrees
from .gpr import GPRModel
from .linear import LinearModel
from .svr import SVRModel
from .tree import RegressionTree

__all__ = ["FORMAT_VERSION", "SavedModel", "model_to_document", "model_from_document",
           "save_model", "load_model"]

FORMAT_NAME = "tumoreval-model"
FORMAT_VERSION = 1

_CLASSES = {
    "linear": LinearModel,
    "interactions": LinearModel,
    "robust": LinearModel,
    "stepwise": LinearModel,
    "tree": RegressionTree,
    "svr": SVRModel,
    "gpr": GPRModel,
    "boosted": BoostedTrees,
    "bagged": BaggedTrees,
}


@dataclass
class SavedModel:
    model: FittedModel
    feature_names: tuple[str, ...] = ()
    normalizer: NormalizerParams | None = None

    def predict(self, X):
        """Predict on raw features, applying the stored normalizer if any."""
        from ..features import normalize_apply

        if self.normalizer is not None:
            X = normalize_apply(self.normalizer, X)
        return self.model.predict(X)


def model_to_document(model: FittedModel, feature_names=(), normalizer: NormalizerParams | None = None) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "family": model.family,
        "n_features": model.n_features,
        "hyperparams": model.hyperparams,
        "parameters": model.parameters(),
        "feature_names": list(feature_names),
        "normalizer": None if normalizer is None else normalizer.to_dict(),
    }


def model_from_document(doc: dict) -> SavedModel:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not a tumoreval model document")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')!r}")
    family = doc["family"]
    if family not in _CLASSES:
        raise ValueError(f"unknown model family {family!r}")
    model = _CLASSES[family].from_parameters(doc["n_features"], doc["hyperparams"], doc["parameters"])
    norm = doc.get("normalizer")
    return SavedModel(
        model,
        tuple(doc.get("feature_names", ())),
        None if norm is None else NormalizerParams.from_dict(norm),
    )


def save_model(model: FittedModel, path, feature_names=(), normalizer=None) -> None:
    doc = model_to_document(model, feature_names, normalizer)
    try:
        Path(path).write_text(json.dumps(doc, indent=1) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_model(path) -> SavedModel:
    try:
        return model_from_document(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
