"""Spatio-temporal acceleration field over (x, y, t) and its vector calculus.

Two independent GPs model the field components. With zero cross-covariance
between them, variances of sums of their derivatives simply add.
"""
from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import gp
from .errors import InputError
from .gp import GaussianScalar, GpModel, OptimizerConfig
from .kernel import KernelHyperparams, kernel_matrix

X_DIM, Y_DIM, T_DIM = 0, 1, 2


@dataclass(frozen=True, eq=False)
class FieldModel:
    gp_vx: GpModel
    gp_vy: GpModel

    @property
    def inputs(self) -> np.ndarray:
        return self.gp_vx.inputs


@dataclass(frozen=True)
class DerivativeTuple:
    vx: GaussianScalar
    vy: GaussianScalar
    dvx_dx: GaussianScalar
    dvy_dy: GaussianScalar
    dvx_dy: GaussianScalar
    dvy_dx: GaussianScalar


def default_hyperparams(inputs: np.ndarray, targets: np.ndarray) -> KernelHyperparams:
    """Data-scaled start: output scale from the targets, lengths from the input spread."""
    scale = float(np.std(targets)) if targets.size else 0.0
    if scale <= 0.0:
        scale = 1.0
    spread = np.std(inputs, axis=0) if inputs.shape[0] > 1 else np.ones(3)
    spread = np.where(spread > 0, spread, 1.0)
    return KernelHyperparams(scale, tuple(spread), 0.1 * scale)


def pool_samples(samples):
    """Stack acceleration samples into (x, y, t) inputs and mean targets.

    Exact duplicate inputs are merged by averaging their targets.
    """
    groups: OrderedDict = OrderedDict()
    for s in samples:
        groups.setdefault((s.x, s.y, s.t), []).append((s.ax.mean, s.ay.mean))
    if len(groups) < len(samples):
        warnings.warn(f"{len(samples) - len(groups)} duplicate (x, y, t) inputs averaged",
                      RuntimeWarning, stacklevel=2)
    X = np.array(list(groups.keys()), dtype=float).reshape(-1, 3)
    A = np.array([np.mean(v, axis=0) for v in groups.values()], dtype=float).reshape(-1, 2)
    return X, A[:, 0], A[:, 1]


def fit_field(samples, init_x: KernelHyperparams | None = None,
              init_y: KernelHyperparams | None = None, optimize: bool = True,
              config: OptimizerConfig | None = None) -> FieldModel:
    """Regress pooled acceleration means on (x, y, t), one GP per axis."""
    if len(samples) < 4:
        raise InputError(f"field layer needs at least 4 samples, got {len(samples)}")
    X, ax, ay = pool_samples(samples)
    models = []
    for targets, init in ((ax, init_x), (ay, init_y)):
        if init is None:
            init = default_hyperparams(X, targets)
        if init.ndim != 3:
            raise InputError("field kernels take three inputs (x, y, t)")
        if optimize:
            init = gp.optimize_hyperparameters(X, targets, init, config).hyperparams
        models.append(gp.fit(X, targets, init))
    return FieldModel(*models)


def prior_field(hp_x: KernelHyperparams, hp_y: KernelHyperparams) -> FieldModel:
    """Field model without data."""
    return FieldModel(gp.prior_model(hp_x), gp.prior_model(hp_y))


def _evaluate(model: GpModel, x, y, t, deriv=()) -> GaussianScalar:
    bx, by, bt = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, t)))
    pts = np.stack([bx.ravel(), by.ravel(), bt.ravel()], axis=1)
    mean, var = model.predict_linear(pts, deriv)
    if bx.ndim == 0:
        return GaussianScalar(float(mean[0]), float(var[0]))
    return GaussianScalar(mean.reshape(bx.shape), var.reshape(bx.shape))


def _add(a: GaussianScalar, b: GaussianScalar, sign: float = 1.0) -> GaussianScalar:
    return GaussianScalar(a.mean + sign * b.mean, a.variance + b.variance)


def predict_vector(model: FieldModel, x, y, t) -> tuple[GaussianScalar, GaussianScalar]:
    return _evaluate(model.gp_vx, x, y, t), _evaluate(model.gp_vy, x, y, t)


def predict_derivatives(model: FieldModel, x, y, t) -> DerivativeTuple:
    vx, vy = predict_vector(model, x, y, t)
    return DerivativeTuple(
        vx=vx,
        vy=vy,
        dvx_dx=_evaluate(model.gp_vx, x, y, t, (X_DIM,)),
        dvy_dy=_evaluate(model.gp_vy, x, y, t, (Y_DIM,)),
        dvx_dy=_evaluate(model.gp_vx, x, y, t, (Y_DIM,)),
        dvy_dx=_evaluate(model.gp_vy, x, y, t, (X_DIM,)),
    )


def divergence(model: FieldModel, x, y, t) -> GaussianScalar:
    return _add(_evaluate(model.gp_vx, x, y, t, (X_DIM,)),
                _evaluate(model.gp_vy, x, y, t, (Y_DIM,)))


def curl_z(model: FieldModel, x, y, t) -> GaussianScalar:
    return _add(_evaluate(model.gp_vy, x, y, t, (X_DIM,)),
                _evaluate(model.gp_vx, x, y, t, (Y_DIM,)), sign=-1.0)


def laplacian_posterior(model: FieldModel, x, y, t) -> GaussianScalar:
    """Posterior of the utility Laplacian, identified with the field divergence."""
    return divergence(model, x, y, t)


def prior_laplacian_variance(model: FieldModel) -> float:
    """``h_x^2/lambda_x^2 + h_y^2/lambda_y^2`` from the two axis kernels."""
    origin = np.zeros((1, 3))
    vx = kernel_matrix(origin, origin, model.gp_vx.hyperparams, (X_DIM,), (X_DIM,))[0, 0]
    vy = kernel_matrix(origin, origin, model.gp_vy.hyperparams, (Y_DIM,), (Y_DIM,))[0, 0]
    return float(vx + vy)
