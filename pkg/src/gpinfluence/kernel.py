"""Squared-exponential kernel, its analytic derivatives, and matrix assembly.

Derivative requests are written as multi-indices: a tuple of input
dimensions, one entry per differentiation. ``()`` is the kernel itself,
``(0,)`` is d/dx_0 and ``(0, 1)`` is d^2/dx_0 dx_1. Up to two entries are
allowed per argument.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import InputError

if os.environ.get("GPINFLUENCE_PURE_PYTHON"):
    from . import _kernels_py as _core
else:
    try:
        from . import _kernels_ext as _core
    except ImportError:  # extension not built
        from . import _kernels_py as _core

BACKEND = _core.NAME

MAX_ORDER = 2


@dataclass(frozen=True)
class KernelHyperparams:
    """Output scale ``l``, per-dimension length scales, and noise std.

    The kernel is ``l^2 exp(-1/2 r^T diag(length_scales^2)^-1 r)``, so the
    prior variance of df/dx_d is ``l^2 / length_scales[d]^2``.
    """

    output_scale: float
    length_scales: tuple[float, ...]
    noise_std: float = 0.0

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.length_scales))
        object.__setattr__(self, "length_scales", ls)
        object.__setattr__(self, "output_scale", float(self.output_scale))
        object.__setattr__(self, "noise_std", float(self.noise_std))
        if not ls:
            raise InputError("at least one length scale is required")
        if not all(np.isfinite(v) and v > 0 for v in ls):
            raise InputError(f"length scales must be positive, got {ls}")
        if not (np.isfinite(self.output_scale) and self.output_scale > 0):
            raise InputError(f"output scale must be positive, got {self.output_scale}")
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0):
            raise InputError(f"noise std must be non-negative, got {self.noise_std}")

    @property
    def ndim(self) -> int:
        return len(self.length_scales)

    @property
    def variance(self) -> float:
        return self.output_scale ** 2

    def replace(self, **changes) -> "KernelHyperparams":
        fields = dict(
            output_scale=self.output_scale,
            length_scales=self.length_scales,
            noise_std=self.noise_std,
        )
        fields.update(changes)
        return KernelHyperparams(**fields)

    def as_dict(self) -> dict:
        return {
            "output_scale": self.output_scale,
            "length_scales": list(self.length_scales),
            "noise_std": self.noise_std,
        }


def _point(a, hp: KernelHyperparams) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.ndim != 1 or a.shape[0] != hp.ndim:
        raise InputError(
            f"input point has dimension {a.shape}, kernel expects {hp.ndim}"
        )
    return a


def _points(X, hp: KernelHyperparams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and hp.ndim == 1:
        X = X[:, None]
    elif X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != hp.ndim:
        raise InputError(
            f"inputs have shape {X.shape}, kernel expects (n, {hp.ndim})"
        )
    return np.ascontiguousarray(X)


def derivative_counts(index, ndim: int) -> np.ndarray:
    """Per-dimension counts for a derivative multi-index."""
    index = tuple(index)
    if len(index) > MAX_ORDER:
        raise InputError(
            f"derivative order {len(index)} exceeds the supported maximum {MAX_ORDER}"
        )
    counts = np.zeros(ndim, dtype=np.intc)
    for d in index:
        if not 0 <= int(d) < ndim:
            raise InputError(f"derivative dimension {d} out of range for {ndim} inputs")
        counts[int(d)] += 1
    return counts


def se_kernel(a, b, hp: KernelHyperparams) -> float:
    """``l^2 exp(-1/2 (a-b)^T Lambda^-1 (a-b))``."""
    r = _point(a, hp) - _point(b, hp)
    lam = np.asarray(hp.length_scales) ** 2
    return hp.variance * float(np.exp(-0.5 * np.sum(r * r / lam)))


def se_kernel_grad(a, b, hp: KernelHyperparams) -> np.ndarray:
    """Gradient with respect to ``a``: ``-Lambda^-1 (a-b) k(a, b)``."""
    r = _point(a, hp) - _point(b, hp)
    lam_inv = np.diag(1.0 / np.asarray(hp.length_scales) ** 2)
    return -lam_inv @ r * se_kernel(a, b, hp)


def se_kernel_hess(a, b, hp: KernelHyperparams) -> np.ndarray:
    """Hessian with respect to ``a``: ``Lambda^-1 (r r^T Lambda^-1 - I) k(a, b)``."""
    r = _point(a, hp) - _point(b, hp)
    lam_inv = np.diag(1.0 / np.asarray(hp.length_scales) ** 2)
    outer = np.outer(r, r)
    return lam_inv @ (outer @ lam_inv - np.eye(hp.ndim)) * se_kernel(a, b, hp)


def se_kernel_cross(a, b, hp: KernelHyperparams, da=(), db=()) -> float:
    """Exact mixed partial derivative of the kernel.

    ``da`` differentiates the first argument and ``db`` the second. For a
    stationary kernel each derivative in ``b`` equals minus the same
    derivative in ``a``.
    """
    A = _point(a, hp)[None, :]
    B = _point(b, hp)[None, :]
    return float(kernel_matrix(A, B, hp, da, db)[0, 0])


def kernel_matrix(points_a, points_b, hp: KernelHyperparams, da=(), db=()) -> np.ndarray:
    """Matrix of ``se_kernel_cross(points_a[i], points_b[j], hp, da, db)``."""
    A = _points(points_a, hp)
    B = _points(points_b, hp)
    na = derivative_counts(da, hp.ndim)
    nb = derivative_counts(db, hp.ndim)
    ls = np.asarray(hp.length_scales, dtype=float)
    return _core.cross_matrix(A, B, ls, hp.variance, na, nb)


def sq_lag_terms(X, hp: KernelHyperparams) -> np.ndarray:
    """Scaled squared lags ``(x_i,d - x_j,d)^2 / lambda_d^2`` with shape (D, n, n)."""
    X = _points(X, hp)
    ls = np.asarray(hp.length_scales, dtype=float)
    diff = (X[:, None, :] - X[None, :, :]) / ls
    return np.moveaxis(diff * diff, -1, 0)
