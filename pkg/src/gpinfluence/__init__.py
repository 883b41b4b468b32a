"""Layered Gaussian-process inference of attractors and repellers from agent trajectories.

Per-agent GPs over time give acceleration posteriors; a spatio-temporal GP
over (x, y, t) turns them into an acceleration field whose divergence is the
Laplacian of the agents' utility. Sign-tagged KL divergences of that
Laplacian from its prior mark sinks (negative) and sources (positive).
"""
from .errors import InputError, NumericalError
from .field import (FieldModel, curl_z, divergence, fit_field, laplacian_posterior,
                    predict_derivatives, predict_vector, prior_field)
from .gp import (GaussianScalar, GpModel, OptimizerConfig, fit, log_marginal_likelihood,
                 optimize_hyperparameters, predict, predict_derivative)
from .influence import (GridSpec, InfluenceGrid, build_grid, dominant_minima, kl_gaussian,
                        mean_over_time, signed_kl)
from .kernel import (BACKEND, KernelHyperparams, kernel_matrix, se_kernel, se_kernel_cross,
                     se_kernel_grad, se_kernel_hess)
from .synthetic import SimConfig, UtilityParams, simulate
from .trajectory import Trajectory, fit_trajectory, infer_accelerations, trim_endpoints

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "FieldModel", "GaussianScalar", "GpModel", "GridSpec", "InfluenceGrid",
    "InputError", "KernelHyperparams", "NumericalError", "OptimizerConfig", "SimConfig",
    "Trajectory", "UtilityParams", "build_grid", "curl_z", "divergence", "dominant_minima",
    "fit", "fit_field", "fit_trajectory", "infer_accelerations", "kernel_matrix",
    "kl_gaussian", "laplacian_posterior", "log_marginal_likelihood", "mean_over_time",
    "optimize_hyperparameters", "predict", "predict_derivative", "predict_derivatives",
    "predict_vector", "prior_field", "se_kernel", "se_kernel_cross", "se_kernel_grad",
    "se_kernel_hess", "signed_kl", "simulate", "trim_endpoints",
]
