"""Zero-mean Gaussian process regression with isotropic stationary kernels.

Targets are centered on the training mean. Hyperparameters (length scale,
signal amplitude, noise level) are either fixed by the caller or chosen by
maximizing the log marginal likelihood: an exhaustive log-spaced grid,
followed by one bounded coordinate-descent pass around the best grid point
that only ever accepts improvements.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve
from scipy.optimize import minimize_scalar

from ..errors import NonPositiveDefinite
from .base import FittedModel, check_training_data
from .kernels import GPR_KERNELS, sq_dist, stationary

__all__ = ["GPRModel", "fit_gpr", "log_marginal_likelihood", "hyperparameter_grid", "cholesky_jitter"]

LENGTHSCALE_GRID = np.geomspace(0.05, 5.0, 9)
SIGMA_F_FACTORS = (0.25, 0.5, 1.0, 2.0)
SIGMA_N_FACTORS = (0.01, 0.05, 0.1, 0.3)

_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


def cholesky_jitter(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``A + jitter * I``.

    The jitter starts at ``1e-10 * trace(A) / n`` and grows tenfold per
    failure up to ``1e-4 * trace(A) / n``.
    """
    n = A.shape[0]
    base = float(np.trace(A)) / n
    if not math.isfinite(base) or base <= 0:
        raise NonPositiveDefinite("covariance matrix has non-positive trace")
    factor = _JITTER_START
    eye = np.eye(n)
    while factor <= _JITTER_MAX * (1 + 1e-9):
        jitter = factor * base
        try:
            return np.linalg.cholesky(A + jitter * eye), jitter
        except np.linalg.LinAlgError:
            factor *= 10.0
    raise NonPositiveDefinite(f"covariance not positive definite with jitter up to {_JITTER_MAX:g}*trace/n")


def log_marginal_likelihood(r: np.ndarray, yc: np.ndarray, kind: str, lengthscale: float,
                            sigma_f: float, sigma_n: float, alpha: float = 1.0) -> float:
    """log p(y | X, theta) for centered targets ``yc`` and pairwise distance matrix ``r``."""
    n = yc.shape[0]
    K = stationary(kind, r, lengthscale, sigma_f, alpha)
    K[np.diag_indices(n)] += sigma_n * sigma_n
    try:
        L, _ = cholesky_jitter(K)
    except NonPositiveDefinite:
        return -np.inf
    w = cho_solve((L, True), yc)
    return float(-0.5 * yc @ w - np.log(np.diag(L)).sum() - 0.5 * n * math.log(2 * math.pi))


def hyperparameter_grid(y_std: float):
    """Candidate (lengthscale, sigma_f, sigma_n) triples, as a list."""
    scale = y_std if y_std > 0 else 1.0
    return [
        (float(ell), f * scale, nf * scale)
        for ell in LENGTHSCALE_GRID
        for f in SIGMA_F_FACTORS
        for nf in SIGMA_N_FACTORS
    ]


class GPRModel(FittedModel):
    family = "gpr"

    def __init__(self, X_train, weights, y_mean, kernel, lengthscale, sigma_f, sigma_n,
                 n_features, alpha=1.0, hyperparams=None, info=None):
        super().__init__(n_features, hyperparams)
        self.X_train = np.asarray(X_train, dtype=np.float64).reshape(-1, n_features)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.y_mean = float(y_mean)
        self.kernel = kernel
        self.lengthscale = float(lengthscale)
        self.sigma_f = float(sigma_f)
        self.sigma_n = float(sigma_n)
        self.alpha = float(alpha)
        self.info = info or {}

    def cross_kernel(self, X) -> np.ndarray:
        r = np.sqrt(sq_dist(X, self.X_train))
        return stationary(self.kernel, r, self.lengthscale, self.sigma_f, self.alpha)

    def _predict(self, X):
        return self.cross_kernel(X) @ self.weights + self.y_mean

    def parameters(self):
        return {
            "X_train": self.X_train.tolist(),
            "weights": self.weights.tolist(),
            "y_mean": self.y_mean,
            "kernel": self.kernel,
            "lengthscale": self.lengthscale,
            "sigma_f": self.sigma_f,
            "sigma_n": self.sigma_n,
            "alpha": self.alpha,
        }

    @classmethod
    def from_parameters(cls, n_features, hyperparams, params):
        return cls(
            params["X_train"], params["weights"], params["y_mean"], params["kernel"],
            params["lengthscale"], params["sigma_f"], params["sigma_n"], n_features,
            params["alpha"], hyperparams,
        )


def _refine(r, yc, kind, theta, best, alpha, steps):
    theta = list(theta)
    for k, step in enumerate(steps):
        if step <= 0:
            continue
        centre = math.log(theta[k])

        def neg(logv, k=k):
            trial = list(theta)
            trial[k] = math.exp(logv)
            return -log_marginal_likelihood(r, yc, kind, *trial, alpha=alpha)

        res = minimize_scalar(neg, bounds=(centre - step, centre + step), method="bounded",
                              options={"xatol": 1e-3})
        if res.success and -res.fun > best:
            best = -res.fun
            theta[k] = math.exp(res.x)
    return tuple(theta), best


def fit_gpr(X, y, kernel: str = "sq_exp", optimize: bool = True, lengthscale: float | None = None,
            sigma_f: float | None = None, sigma_n: float | None = None,
            alpha: float = 1.0) -> GPRModel:
    """Fit a GP regressor.

    With ``optimize=False`` all of ``lengthscale``, ``sigma_f`` and
    ``sigma_n`` must be given. With ``optimize=True`` any of them that is
    given stays fixed and the rest are searched.
    """
    if kernel not in GPR_KERNELS:
        raise ValueError(f"unknown GPR kernel {kernel!r}")
    X, y = check_training_data(X, y)
    y_mean = float(y.mean())
    yc = y - y_mean
    r = np.sqrt(sq_dist(X, X))
    fixed = (lengthscale, sigma_f, sigma_n)
    info = {}
    if not optimize:
        if any(v is None for v in fixed):
            raise ValueError("fixed hyperparameters need lengthscale, sigma_f and sigma_n")
        theta = tuple(float(v) for v in fixed)
    else:
        best, theta = -np.inf, None
        evaluated = []
        grid = {
            tuple(f if f is not None else g for f, g in zip(fixed, cand))
            for cand in hyperparameter_grid(float(np.std(y)))
        }
        for cand in sorted(grid):
            ll = log_marginal_likelihood(r, yc, kernel, *cand, alpha=alpha)
            evaluated.append((cand, ll))
            if ll > best:
                best, theta = ll, cand
        if theta is None:
            raise NonPositiveDefinite("no grid point gave a positive-definite covariance")
        info["grid"] = evaluated
        ell_step = math.log(LENGTHSCALE_GRID[1] / LENGTHSCALE_GRID[0])
        steps = [0.0 if f is not None else s for f, s in zip(fixed, (ell_step, math.log(2), math.log(2)))]
        theta, best = _refine(r, yc, kernel, theta, best, alpha, steps)
        info["lml"] = best
    ell, sf, sn = theta
    if min(theta) <= 0:
        raise ValueError("GPR hyperparameters must be positive")
    K = stationary(kernel, r, ell, sf, alpha)
    K[np.diag_indices(K.shape[0])] += sn * sn
    L, jitter = cholesky_jitter(K)
    weights = cho_solve((L, True), yc)
    info["jitter"] = jitter
    hp = {"kernel": kernel, "optimize": optimize, "alpha": alpha}
    return GPRModel(X, weights, y_mean, kernel, ell, sf, sn, X.shape[1], alpha, hp, info)
