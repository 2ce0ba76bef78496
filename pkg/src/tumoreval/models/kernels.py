"""Covariance functions for SVR and GPR.

All Gram matrices are built from explicit per-feature differences/products so
that ``k(x, z) == k(z, x)`` holds bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SVR_KERNELS = ("linear", "poly2", "poly3", "gaussian")
GPR_KERNELS = ("sq_exp", "matern52", "exponential", "rational_quadratic")


def sq_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    out = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k][:, None] - B[:, k][None, :]
        out += diff * diff
    return out


def dot(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    out = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        out += A[:, k][:, None] * B[:, k][None, :]
    return out


def stationary(kind: str, r: np.ndarray, lengthscale: float, sigma_f: float, alpha: float = 1.0):
    """Isotropic GPR kernel value as a function of Euclidean lag ``r``."""
    var = sigma_f * sigma_f
    if kind == "sq_exp":
        return var * np.exp(-(r * r) / (2.0 * lengthscale * lengthscale))
    if kind == "matern52":
        s = math.sqrt(5.0) * r / lengthscale
        return var * (1.0 + s + s * s / 3.0) * np.exp(-s)
    if kind == "exponential":
        return var * np.exp(-r / lengthscale)
    if kind == "rational_quadratic":
        return var * (1.0 + (r * r) / (2.0 * alpha * lengthscale * lengthscale)) ** (-alpha)
    raise ValueError(f"unknown GPR kernel {kind!r}")


@dataclass(frozen=True)
class KernelFn:
    """A kernel with its parameters; call it on two row matrices for the Gram matrix.

    SVR kinds: ``linear`` x.z, ``poly2``/``poly3`` (1 + x.z)^d, ``gaussian``
    exp(-|x-z|^2 / s^2) with ``scale`` s. GPR kinds (see :func:`stationary`)
    use ``lengthscale``, ``sigma_f`` and, for rational quadratic, ``alpha``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SVR_KERNELS + GPR_KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}")
        for name, value in self.params.items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"kernel parameter {name} must be positive, got {value}")

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        p = self.params
        if self.kind == "linear":
            return dot(A, B)
        if self.kind in ("poly2", "poly3"):
            return (1.0 + dot(A, B)) ** (2 if self.kind == "poly2" else 3)
        if self.kind == "gaussian":
            s = p.get("scale", 1.0)
            return np.exp(-sq_dist(A, B) / (s * s))
        r = np.sqrt(sq_dist(A, B))
        return stationary(
            self.kind, r, p.get("lengthscale", 1.0), p.get("sigma_f", 1.0), p.get("alpha", 1.0)
        )
