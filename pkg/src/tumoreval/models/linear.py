"""Linear regression family: OLS, pairwise interactions, Huber IRLS, stepwise."""
from __future__ import annotations

import itertools
import warnings

import numpy as np
from scipy import stats

from .base import FittedModel, as_matrix, check_training_data

__all__ = [
    "LinearModel",
    "RankDeficiencyWarning",
    "design_matrix",
    "interaction_pairs",
    "lstsq",
    "fit_linear",
    "fit_interactions",
    "fit_robust",
    "fit_stepwise",
]

HUBER_T = 1.345
MAD_TO_SIGMA = 0.6745


class RankDeficiencyWarning(UserWarning):
    pass


def interaction_pairs(p: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(p), 2))


def design_matrix(X: np.ndarray, interactions: bool = False, columns=None) -> np.ndarray:
    """Intercept column, then the (selected) linear terms, then pairwise products."""
    X = as_matrix(X)
    cols = [np.ones(X.shape[0])]
    use = range(X.shape[1]) if columns is None else columns
    cols.extend(X[:, j] for j in use)
    if interactions:
        cols.extend(X[:, i] * X[:, j] for i, j in interaction_pairs(X.shape[1]))
    return np.column_stack(cols)


def lstsq(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least squares via SVD; minimum-norm solution (with a warning) if rank deficient."""
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        warnings.warn(
            f"design matrix has rank {rank} < {A.shape[1]} columns; using minimum-norm solution",
            RankDeficiencyWarning,
            stacklevel=3,
        )
    return coef


class LinearModel(FittedModel):
    """``y = coef[0] + sum(coef[1:] * design terms)``.

    ``columns`` restricts the linear terms to a subset of features (stepwise);
    ``interactions`` appends every pairwise product.
    """

    family = "linear"

    def __init__(
        self, coef, n_features, interactions=False, columns=None, hyperparams=None,
        family="linear", **info,
    ):
        super().__init__(n_features, hyperparams)
        self.family = family
        self.coef = np.asarray(coef, dtype=np.float64)
        self.interactions = bool(interactions)
        self.columns = None if columns is None else tuple(int(c) for c in columns)
        self.info = info

    @property
    def intercept(self) -> float:
        return float(self.coef[0])

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(range(self.n_features)) if self.columns is None else self.columns

    def _predict(self, X):
        return design_matrix(X, self.interactions, self.columns) @ self.coef

    def parameters(self):
        return {
            "coef": self.coef.tolist(),
            "interactions": self.interactions,
            "columns": None if self.columns is None else list(self.columns),
            "family": self.family,
        }

    @classmethod
    def from_parameters(cls, n_features, hyperparams, params):
        return cls(
            params["coef"], n_features, params["interactions"], params["columns"], hyperparams,
            family=params.get("family", cls.family),
        )


def fit_linear(X, y) -> LinearModel:
    """Ordinary least squares with intercept."""
    X, y = check_training_data(X, y)
    return LinearModel(lstsq(design_matrix(X), y), X.shape[1])


def fit_interactions(X, y) -> LinearModel:
    """OLS on linear terms plus all pairwise products x_i * x_j (i < j)."""
    X, y = check_training_data(X, y)
    coef = lstsq(design_matrix(X, interactions=True), y)
    return LinearModel(coef, X.shape[1], interactions=True, family="interactions")


def _mad_sigma(r: np.ndarray) -> float:
    return float(np.median(np.abs(r - np.median(r)))) / MAD_TO_SIGMA


def fit_robust(X, y, tol: float = 1e-6, max_iter: int = 50) -> LinearModel:
    """Huber M-estimate by iteratively reweighted least squares.

    Each iteration rescales residuals by sigma = MAD/0.6745 and downweights
    those beyond 1.345 sigma. Stops when no coefficient moves by ``tol``.
    """
    X, y = check_training_data(X, y)
    A = design_matrix(X)
    beta = lstsq(A, y)
    scale_floor = 1e-12 * max(1.0, float(np.max(np.abs(y))))
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        r = y - A @ beta
        sigma = _mad_sigma(r)
        if sigma <= scale_floor:
            w = np.ones_like(r)
        else:
            c = HUBER_T * sigma
            absr = np.abs(r)
            w = np.where(absr <= c, 1.0, c / np.maximum(absr, c))
        sw = np.sqrt(w)
        new = lstsq(A * sw[:, None], y * sw)
        change = float(np.max(np.abs(new - beta)))
        beta = new
        if change < tol:
            break
    return LinearModel(beta, X.shape[1], family="robust", n_iter=n_iter)


def _sse(X: np.ndarray, y: np.ndarray, cols: list[int]) -> float:
    A = design_matrix(X, columns=cols)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(r @ r)


def _partial_f_pvalue(sse_small: float, sse_big: float, df_resid: int, sst: float) -> float:
    if df_resid <= 0:
        return 1.0
    delta = sse_small - sse_big
    if delta <= 1e-12 * sst:
        return 1.0
    if sse_big <= 1e-24 * sst:
        return 0.0
    return float(stats.f.sf(delta / (sse_big / df_resid), 1, df_resid))


def fit_stepwise(X, y, p_enter: float = 0.05, p_remove: float = 0.10, max_steps: int = 100) -> LinearModel:
    """Bidirectional stepwise selection over linear terms, starting intercept-only.

    Each round adds the candidate with the smallest partial-F p-value if it is
    below ``p_enter``, then drops the worst included term if its p-value
    exceeds ``p_remove``. Ties go to the lowest column index.
    """
    X, y = check_training_data(X, y)
    if p_enter > p_remove:
        raise ValueError("p_enter must not exceed p_remove")
    n, p = X.shape
    sst = float(np.sum((y - y.mean()) ** 2))
    selected: list[int] = []
    for _ in range(max_steps):
        changed = False
        sse_cur = _sse(X, y, selected)
        best_j, best_p = None, p_enter
        for j in range(p):
            if j in selected:
                continue
            cols = sorted(selected + [j])
            pval = _partial_f_pvalue(sse_cur, _sse(X, y, cols), n - len(cols) - 1, sst)
            if pval < best_p:
                best_j, best_p = j, pval
        if best_j is not None:
            selected = sorted(selected + [best_j])
            changed = True
            sse_cur = _sse(X, y, selected)
        worst_j, worst_p = None, p_remove
        for j in selected:
            cols = [c for c in selected if c != j]
            pval = _partial_f_pvalue(_sse(X, y, cols), sse_cur, n - len(selected) - 1, sst)
            if pval > worst_p:
                worst_j, worst_p = j, pval
        if worst_j is not None:
            selected.remove(worst_j)
            changed = True
        if not changed:
            break
    coef = lstsq(design_matrix(X, columns=selected), y)
    return LinearModel(coef, p, columns=selected, family="stepwise")
