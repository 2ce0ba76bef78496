"""Epsilon-insensitive support vector regression, solved in the dual by SMO.

The dual is written in the doubled form used by LIBSVM: variables
``a = (alpha, alpha*)`` in ``[0, C]^(2n)`` with signs ``s = (+1, -1)``,
minimizing ``1/2 a'Qa + p'a`` subject to ``s'a = 0`` where
``Q_ij = s_i s_j K_ij`` and ``p = (eps - y, eps + y)``. Each iteration picks
the maximal-violating pair with second-order working-set selection and
solves the two-variable subproblem exactly, so the dual objective never
decreases.
"""
from __future__ import annotations

import numpy as np

from ..errors import NonConvergence
from .base import FittedModel, check_training_data
from .kernels import KernelFn

__all__ = ["SVRModel", "fit_svr", "smo_solve", "SVR_PRESETS"]

_TAU = 1e-12

# table column -> (kernel, gaussian scale)
SVR_PRESETS = {
    "linear": ("linear", None),
    "quadratic": ("poly2", None),
    "cubic": ("poly3", None),
    "fine_gaussian": ("gaussian", 0.5),
    "medium_gaussian": ("gaussian", 2.0),
    "coarse_gaussian": ("gaussian", 8.0),
}


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, epsilon: float, tol: float = 1e-3,
              max_iter: int = 10_000, raise_on_fail: bool = True):
    """Solve the epsilon-SVR dual for Gram matrix ``K``.

    Returns ``(beta, b, info)`` where predictions are ``K(x, X) @ beta + b``
    and ``info`` holds ``iterations``, ``kkt_gap`` and ``objective``, the
    dual objective (to be maximized) after every pair update.
    """
    n = y.shape[0]
    s = np.concatenate([np.ones(n), -np.ones(n)])
    idx = np.concatenate([np.arange(n), np.arange(n)])
    Q = (s[:, None] * s[None, :]) * K[np.ix_(idx, idx)]
    QD = np.diag(Q).copy()
    p = np.concatenate([epsilon - y, epsilon + y])
    a = np.zeros(2 * n)
    G = p.copy()
    history = [0.0]
    gap = np.inf
    it = 0
    while True:
        up = ((s > 0) & (a < C)) | ((s < 0) & (a > 0))
        low = ((s > 0) & (a > 0)) | ((s < 0) & (a < C))
        sG = s * G
        cand = np.where(up, -sG, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        gmax2 = np.max(np.where(low, sG, -np.inf))
        gap = float(gmax + gmax2)
        if gap < tol:
            break
        if it >= max_iter:
            if raise_on_fail:
                raise NonConvergence(f"SMO stopped after {max_iter} iterations", gap)
            break
        grad_diff = gmax + sG
        ok = low & (grad_diff > 0)
        if not ok.any():
            break
        quad = QD[i] + QD - 2.0 * s[i] * s * Q[i]
        quad = np.where(quad > 0, quad, _TAU)
        j = int(np.argmin(np.where(ok, -(grad_diff ** 2) / quad, np.inf)))

        ai, aj = a[i], a[j]
        if s[i] != s[j]:
            qc = QD[i] + QD[j] + 2.0 * Q[i, j]
            delta = (-G[i] - G[j]) / (qc if qc > 0 else _TAU)
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            qc = QD[i] + QD[j] - 2.0 * Q[i, j]
            delta = (G[i] - G[j]) / (qc if qc > 0 else _TAU)
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        dai, daj = ai - a[i], aj - a[j]
        a[i], a[j] = ai, aj
        G += Q[:, i] * dai + Q[:, j] * daj
        history.append(-0.5 * float(a @ (G + p)))
        it += 1

    beta = a[:n] - a[n:]
    b = -_rho(a, s, G, C)
    return beta, b, {"iterations": it, "kkt_gap": gap, "objective": history}


def _rho(a, s, G, C) -> float:
    sG = s * G
    at_upper = a >= C
    at_lower = a <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(np.mean(sG[free]))
    ub, lb = np.inf, -np.inf
    for t in range(a.shape[0]):
        if at_upper[t]:
            if s[t] < 0:
                ub = min(ub, sG[t])
            else:
                lb = max(lb, sG[t])
        else:
            if s[t] > 0:
                ub = min(ub, sG[t])
            else:
                lb = max(lb, sG[t])
    return float((ub + lb) / 2)


class SVRModel(FittedModel):
    family = "svr"

    def __init__(self, support, coef, bias, kernel: KernelFn, n_features, hyperparams=None, info=None):
        super().__init__(n_features, hyperparams)
        self.support = np.asarray(support, dtype=np.float64).reshape(-1, n_features)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.bias = float(bias)
        self.kernel = kernel
        self.info = info or {}

    def _predict(self, X):
        if self.coef.size == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel(X, self.support) @ self.coef + self.bias

    def parameters(self):
        return {
            "support": self.support.tolist(),
            "coef": self.coef.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.kind,
            "kernel_params": dict(self.kernel.params),
        }

    @classmethod
    def from_parameters(cls, n_features, hyperparams, params):
        kernel = KernelFn(params["kernel"], params["kernel_params"])
        return cls(params["support"], params["coef"], params["bias"], kernel, n_features, hyperparams)


def fit_svr(X, y, kernel: str = "gaussian", scale: float | None = None, C: float = 1.0,
            epsilon: float | None = None, tol: float = 1e-3, max_iter: int = 10_000) -> SVRModel:
    """Fit an epsilon-SVR. ``epsilon`` defaults to ``0.1 * std(y)``."""
    X, y = check_training_data(X, y)
    if C <= 0:
        raise ValueError("box constraint C must be positive")
    if epsilon is None:
        epsilon = 0.1 * float(np.std(y))
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    params = {"scale": float(scale if scale is not None else 1.0)} if kernel == "gaussian" else {}
    kfn = KernelFn(kernel, params)
    beta, b, info = smo_solve(kfn(X, X), y, C, epsilon, tol, max_iter)
    keep = beta != 0
    hp = {"kernel": kernel, "scale": scale, "C": C, "epsilon": epsilon, "tol": tol}
    return SVRModel(X[keep], beta[keep], b, kfn, X.shape[1], hp, info)
