"""Slow, obviously-correct reference implementations used by the tests.

None of these share code with the package: boundaries come from
``scipy.ndimage.binary_erosion``, distances from all-pairs ``cdist``,
regressions from textbook closed forms.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import cdist

FACE_STRUCTURE = ndimage.generate_binary_structure(3, 1)


def coords_mm(mask: np.ndarray, spacing) -> np.ndarray:
    return np.argwhere(mask) * np.asarray(spacing, dtype=float)


def brute_edt(mask: np.ndarray, spacing, chunk: int = 4096) -> np.ndarray:
    """Distance of every voxel to the nearest foreground voxel, by enumeration."""
    fg = coords_mm(mask, spacing)
    allv = np.argwhere(np.ones(mask.shape, dtype=bool)) * np.asarray(spacing, dtype=float)
    out = np.empty(allv.shape[0])
    for s in range(0, allv.shape[0], chunk):
        out[s:s + chunk] = cdist(allv[s:s + chunk], fg).min(axis=1)
    return out.reshape(mask.shape)


def boundary(mask: np.ndarray) -> np.ndarray:
    """Foreground voxels with a background (or out-of-volume) face neighbour."""
    return mask & ~ndimage.binary_erosion(mask, FACE_STRUCTURE, border_value=0)


def nearest_rank(values, q: float) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    rank = max(1, math.ceil(round(q / 100.0 * v.size, 9)))
    return float(v[rank - 1])


def brute_hd(pred: np.ndarray, gt: np.ndarray, spacing, q: float = 95.0) -> float:
    a = coords_mm(boundary(pred), spacing)
    b = coords_mm(boundary(gt), spacing)
    d = cdist(a, b)
    return max(nearest_rank(d.min(axis=1), q), nearest_rank(d.min(axis=0), q))


def confusion_counts(pred: np.ndarray, gt: np.ndarray) -> tuple[int, int, int, int]:
    p, g = pred.ravel().tolist(), gt.ravel().tolist()
    tp = sum(1 for a, b in zip(p, g) if a and b)
    fp = sum(1 for a, b in zip(p, g) if a and not b)
    fn = sum(1 for a, b in zip(p, g) if b and not a)
    return tp, fp, fn, len(p) - tp - fp - fn


def ols_normal_equations(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    A = np.column_stack([np.ones(X.shape[0]), X])
    return np.linalg.solve(A.T @ A, A.T @ y)


def sq_exp_gram(A: np.ndarray, B: np.ndarray, ell: float, sf: float) -> np.ndarray:
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    return sf * sf * np.exp(-0.5 * d2 / (ell * ell))


def gp_posterior_mean(X, y, Xs, ell, sf, sn, jitter: float = 0.0) -> np.ndarray:
    K = sq_exp_gram(X, X, ell, sf) + (sn * sn + jitter) * np.eye(X.shape[0])
    mu = y.mean()
    return sq_exp_gram(Xs, X, ell, sf) @ np.linalg.solve(K, y - mu) + mu
