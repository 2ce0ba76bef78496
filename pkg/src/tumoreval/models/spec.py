"""Declarative model specifications and the full model zoo of the comparison tables."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .base import FittedModel
from .ensemble import fit_bagged, fit_boosted
from .gpr import fit_gpr
from .linear import fit_interactions, fit_linear, fit_robust, fit_stepwise
from .svr import SVR_PRESETS, fit_svr
from .tree import MIN_LEAF_PRESETS, fit_tree

__all__ = ["Family", "ModelSpec", "ZOO", "fit_model", "resolve_models"]


class Family(str, enum.Enum):
    LINEAR = "linear"
    INTERACTIONS = "interactions"
    ROBUST = "robust"
    STEPWISE = "stepwise"
    TREE = "tree"
    SVR = "svr"
    GPR = "gpr"
    BOOSTED = "boosted"
    BAGGED = "bagged"


_FITTERS = {
    Family.LINEAR: fit_linear,
    Family.INTERACTIONS: fit_interactions,
    Family.ROBUST: fit_robust,
    Family.STEPWISE: fit_stepwise,
    Family.TREE: fit_tree,
    Family.SVR: fit_svr,
    Family.GPR: fit_gpr,
    Family.BOOSTED: fit_boosted,
    Family.BAGGED: fit_bagged,
}


@dataclass(frozen=True)
class ModelSpec:
    """One regression family plus hyperparameters.

    ``name`` is the machine key (CSV, CLI); ``label`` is the table column
    title. Hyperparameters are passed to the family's fit function as
    keyword arguments.
    """

    family: Family
    hyperparams: Mapping[str, Any] = field(default_factory=dict)
    name: str = ""
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "hyperparams", dict(self.hyperparams))
        if not self.name:
            object.__setattr__(self, "name", self.family.value)
        if not self.label:
            object.__setattr__(self, "label", self.name)

    def with_params(self, **overrides) -> "ModelSpec":
        return ModelSpec(self.family, {**self.hyperparams, **overrides}, self.name, self.label)

    def fit(self, X, y, seed_offset: int = 0) -> FittedModel:
        return fit_model(self, X, y, seed_offset)


def fit_model(spec: ModelSpec, X, y, seed_offset: int = 0) -> FittedModel:
    """Fit ``spec`` on ``(X, y)``; ``seed_offset`` shifts the bagging seed."""
    kwargs = dict(spec.hyperparams)
    if spec.family is Family.BAGGED:
        kwargs["seed"] = int(kwargs.get("seed", 0)) + int(seed_offset)
    model = _FITTERS[spec.family](np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64), **kwargs)
    return model


def _zoo() -> dict[str, ModelSpec]:
    specs = [
        ModelSpec(Family.LINEAR, name="linear", label="Linear"),
        ModelSpec(Family.INTERACTIONS, name="interactions", label="Interactions"),
        ModelSpec(Family.ROBUST, name="robust", label="Robust"),
        ModelSpec(Family.STEPWISE, name="stepwise", label="Stepwise"),
    ]
    for key, leaf in MIN_LEAF_PRESETS.items():
        specs.append(ModelSpec(Family.TREE, {"min_leaf": leaf}, f"tree_{key}", key.capitalize()))
    svr_labels = {
        "linear": "Linear", "quadratic": "Quadratic", "cubic": "Cubic",
        "fine_gaussian": "Fine Gaus.", "medium_gaussian": "Medium Gaus.",
        "coarse_gaussian": "Coarse Gaus.",
    }
    for key, (kernel, scale) in SVR_PRESETS.items():
        hp = {"kernel": kernel} if scale is None else {"kernel": kernel, "scale": scale}
        specs.append(ModelSpec(Family.SVR, hp, f"svr_{key}", svr_labels[key]))
    for kernel, label in (("sq_exp", "Squared Exp."), ("matern52", "Matern"),
                          ("exponential", "Exp."), ("rational_quadratic", "Rational Quadratic")):
        specs.append(ModelSpec(Family.GPR, {"kernel": kernel}, f"gpr_{kernel}", label))
    specs.append(ModelSpec(Family.BOOSTED, {"n_stages": 30, "learn_rate": 0.1}, "boosted", "Boosted"))
    specs.append(ModelSpec(Family.BAGGED, {"n_trees": 30, "min_leaf": 8}, "bagged", "Bagged"))
    return {s.name: s for s in specs}


ZOO: dict[str, ModelSpec] = _zoo()


def resolve_models(selection: str) -> list[ModelSpec]:
    """Parse a comma list of zoo names; ``all`` selects the whole zoo.

    Family names that are not themselves zoo keys (``tree``, ``svr``,
    ``gpr``) expand to every zoo entry of that family.
    """
    out: list[ModelSpec] = []
    for token in (t.strip() for t in selection.split(",")):
        if not token:
            continue
        if token == "all":
            matches = list(ZOO.values())
        elif token in ZOO:
            matches = [ZOO[token]]
        else:
            matches = [s for s in ZOO.values() if s.family.value == token]
            if not matches:
                raise ValueError(f"unknown model {token!r}; choose from {', '.join(ZOO)} or 'all'")
        out.extend(m for m in matches if m not in out)
    if not out:
        raise ValueError("no models selected")
    return out
