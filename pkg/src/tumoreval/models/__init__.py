"""Regression model zoo behind one fit/predict contract."""
from .base import FittedModel, predict
from .ensemble import BaggedTrees, BoostedTrees, fit_bagged, fit_boosted
from .gpr import GPRModel, fit_gpr, log_marginal_likelihood
from .kernels import KernelFn
from .linear import (
    LinearModel,
    RankDeficiencyWarning,
    design_matrix,
    fit_interactions,
    fit_linear,
    fit_robust,
    fit_stepwise,
)
from .persist import SavedModel, load_model, save_model
from .spec import ZOO, Family, ModelSpec, fit_model, resolve_models
from .svr import SVRModel, fit_svr
from .tree import RegressionTree, fit_tree

__all__ = [
    "FittedModel", "predict", "KernelFn", "ModelSpec", "Family", "ZOO", "fit_model",
    "resolve_models", "LinearModel", "RankDeficiencyWarning", "design_matrix", "fit_linear",
    "fit_interactions", "fit_robust", "fit_stepwise", "RegressionTree", "fit_tree",
    "SVRModel", "fit_svr", "GPRModel", "fit_gpr", "log_marginal_likelihood",
    "BoostedTrees", "fit_boosted", "BaggedTrees", "fit_bagged",
    "SavedModel", "save_model", "load_model",
]
