"""Single-output zero-mean GP regression with derivative posteriors."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import InputError, NumericalError
from .kernel import KernelHyperparams, _points, kernel_matrix, sq_lag_terms

JITTER_START = 1e-10
JITTER_MAX = 1e-4
_CHUNK = 2048
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianScalar:
    """Mean/variance pair. Fields may also be equal-shaped arrays."""

    mean: float | np.ndarray
    variance: float | np.ndarray

    @property
    def std(self):
        return np.sqrt(self.variance)


@dataclass(frozen=True, eq=False)
class GpModel:
    """A fitted GP. Immutable after :func:`fit`.

    ``chol`` is the lower Cholesky factor of ``K + sigma^2 I + jitter I`` and
    ``alpha`` the solve of that matrix against the targets. ``jitter`` is the
    relative level actually used (absolute jitter is
    ``jitter * (l^2 + sigma^2)``).
    """

    inputs: np.ndarray
    targets: np.ndarray
    hyperparams: KernelHyperparams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def ndim(self) -> int:
        return self.hyperparams.ndim

    def predict_linear(self, points, deriv=()):
        """Posterior mean and variance of a derivative of ``f`` at many points.

        ``deriv`` is a multi-index over input dimensions (``()`` for the
        function itself). Returns two 1-D arrays.
        """
        hp = self.hyperparams
        Xs = _points(points, hp)
        origin = np.zeros((1, hp.ndim))
        prior = kernel_matrix(origin, origin, hp, deriv, deriv)[0, 0]
        mean = np.zeros(Xs.shape[0])
        var = np.full(Xs.shape[0], prior)
        if self.n == 0:
            return mean, var
        for start in range(0, Xs.shape[0], _CHUNK):
            sl = slice(start, start + _CHUNK)
            Ks = kernel_matrix(Xs[sl], self.inputs, hp, deriv, ())
            mean[sl] = Ks @ self.alpha
            V = scipy.linalg.solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
            var[sl] = prior - np.einsum("ij,ij->j", V, V)
        return mean, _clamp_variance(var, prior)


def _clamp_variance(var, prior):
    low = var < 0.0
    if np.any(low):
        if np.min(var) < -1e-8 * prior:
            warnings.warn(
                f"posterior variance {np.min(var):.3e} clamped to 0 "
                f"(prior {prior:.3e}); system is ill-conditioned",
                RuntimeWarning,
                stacklevel=3,
            )
        var = np.where(low, 0.0, var)
    return var


def prior_model(hp: KernelHyperparams) -> GpModel:
    """A model with no data; every prediction is the prior."""
    return GpModel(
        inputs=np.zeros((0, hp.ndim)),
        targets=np.zeros(0),
        hyperparams=hp,
        chol=np.zeros((0, 0)),
        alpha=np.zeros(0),
    )


def _factorize(K: np.ndarray, hp: KernelHyperparams):
    n = K.shape[0]
    C = K + hp.noise_std ** 2 * np.eye(n)
    base = np.trace(C) / n
    level = JITTER_START
    while level <= JITTER_MAX * (1 + 1e-9):
        try:
            L = np.linalg.cholesky(C + level * base * np.eye(n))
            return L, level
        except np.linalg.LinAlgError:
            level *= 10.0
    min_eig = float(np.linalg.eigvalsh(C)[0])
    raise NumericalError(
        f"covariance of {n} points is not positive definite even with jitter "
        f"{JITTER_MAX:g} x trace/N (min eigenvalue {min_eig:.3e}, "
        f"length scales {hp.length_scales}, noise {hp.noise_std:g})"
    )


def fit(inputs, targets, hp: KernelHyperparams) -> GpModel:
    X = _points(inputs, hp)
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] == 0:
        raise InputError("fit needs at least one training point")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("training data contains non-finite values")
    if hp.noise_std == 0.0 and np.unique(X, axis=0).shape[0] < X.shape[0]:
        raise NumericalError(
            "duplicate training inputs with zero noise make the Gram matrix singular"
        )
    K = kernel_matrix(X, X, hp)
    L, level = _factorize(K, hp)
    alpha = scipy.linalg.cho_solve((L, True), y, check_finite=False)
    return GpModel(X, y, hp, L, alpha, level)


def predict(model: GpModel, x) -> GaussianScalar:
    mean, var = model.predict_linear(np.atleast_2d(np.asarray(x, dtype=float)).reshape(1, -1))
    return GaussianScalar(float(mean[0]), float(var[0]))


def predict_derivative(model: GpModel, x, order: int, dim: int) -> GaussianScalar:
    """Posterior of the ``order``-th partial derivative along input ``dim``."""
    if order not in (1, 2):
        raise InputError(f"derivative order must be 1 or 2, got {order}")
    x = np.atleast_2d(np.asarray(x, dtype=float)).reshape(1, -1)
    mean, var = model.predict_linear(x, (dim,) * order)
    return GaussianScalar(float(mean[0]), float(var[0]))


def log_marginal_likelihood(model: GpModel, gradient: bool = False):
    """Gaussian evidence ``log p(y | X, theta)``.

    With ``gradient=True`` also returns the derivative with respect to
    ``[log l, log lambda_1..D, log sigma]``. The jitter added during
    factorization is part of the modelled covariance, so it is
    differentiated too.
    """
    n = model.n
    if n == 0:
        return (0.0, np.zeros(model.ndim + 2)) if gradient else 0.0
    L, alpha, y = model.chol, model.alpha, model.targets
    value = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * _LOG_2PI
    if not gradient:
        return value
    hp = model.hyperparams
    Cinv = scipy.linalg.cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - Cinv
    trW = float(np.trace(W))
    K = kernel_matrix(model.inputs, model.inputs, hp)
    c = model.jitter
    grad = np.empty(hp.ndim + 2)
    grad[0] = float(np.sum(W * K)) + c * hp.variance * trW
    WK = W * K
    for d, S in enumerate(sq_lag_terms(model.inputs, hp)):
        grad[1 + d] = 0.5 * float(np.sum(WK * S))
    grad[-1] = hp.noise_std ** 2 * (1.0 + c) * trW
    return value, grad


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for :func:`optimize_hyperparameters`.

    ``restarts`` counts all starting points; the first is ``init`` itself and
    the rest are log-space perturbations of it with std ``perturbation``.
    Each free log-parameter is boxed to ``init +/- log_bound``. Noise is only
    optimized when the initial noise is positive.
    """

    restarts: int = 5
    seed: int = 0
    perturbation: float = 0.5
    maxiter: int = 200
    optimize_noise: bool = True
    optimize_length_scales: bool = True
    log_bound: float = 7.0


@dataclass(frozen=True)
class OptimizationResult:
    hyperparams: KernelHyperparams
    log_likelihood: float
    initial_log_likelihood: float
    improved: bool
    evaluations: int = 0
    history: list = field(default_factory=list, repr=False)


def _pack(hp: KernelHyperparams) -> np.ndarray:
    """``[log l, log lambda_1..D, log sigma]``; log sigma is -inf when sigma is 0."""
    with np.errstate(divide="ignore"):
        return np.log([hp.output_scale, *hp.length_scales, hp.noise_std])


def _unpack(theta) -> KernelHyperparams:
    theta = np.asarray(theta, dtype=float)
    return KernelHyperparams(
        output_scale=float(np.exp(theta[0])),
        length_scales=tuple(np.exp(theta[1:-1])),
        noise_std=float(np.exp(theta[-1])),
    )


def free_mask(hp: KernelHyperparams, config: OptimizerConfig) -> np.ndarray:
    mask = np.ones(hp.ndim + 2, dtype=bool)
    mask[1:-1] = config.optimize_length_scales
    mask[-1] = config.optimize_noise and hp.noise_std > 0.0
    return mask


def optimize_hyperparameters(inputs, targets, init: KernelHyperparams,
                             config: OptimizerConfig | None = None) -> OptimizationResult:
    """Maximize the log marginal likelihood from ``init`` with restarts.

    The returned hyperparameters never score below ``init``. When no start
    improves on it, ``init`` is returned with ``improved=False`` and a
    warning is issued.
    """
    config = config or OptimizerConfig()
    X = _points(inputs, init)
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] < 2:
        raise InputError("hyperparameter optimization needs at least 2 points")
    full0 = _pack(init)
    mask = free_mask(init, config)
    theta0 = full0[mask]
    lo, hi = theta0 - config.log_bound, theta0 + config.log_bound
    evaluations = 0

    fixed = [init.output_scale, *init.length_scales, init.noise_std]

    def expand(theta):
        # fixed entries are copied from init so they round-trip exactly
        values = list(fixed)
        for i, v in zip(np.flatnonzero(mask), np.exp(theta)):
            values[i] = float(v)
        return KernelHyperparams(values[0], tuple(values[1:-1]), values[-1])

    def objective(theta):
        nonlocal evaluations
        evaluations += 1
        try:
            model = fit(X, y, expand(theta))
        except NumericalError:
            return 1e25, np.zeros_like(theta)
        value, grad = log_marginal_likelihood(model, gradient=True)
        return -value, -grad[mask]

    f0, _ = objective(theta0)
    rng = np.random.default_rng(config.seed)
    starts = [theta0]
    for _ in range(max(config.restarts, 1) - 1):
        starts.append(np.clip(theta0 + config.perturbation * rng.standard_normal(theta0.size), lo, hi))

    best_theta, best_f, history = theta0, f0, []
    for start in starts:
        res = scipy.optimize.minimize(
            objective, start, jac=True, method="L-BFGS-B",
            bounds=list(zip(lo, hi)), options={"maxiter": config.maxiter},
        )
        history.append(float(-res.fun))
        if res.fun < best_f:
            best_theta, best_f = res.x, float(res.fun)

    improved = best_f < f0
    if not improved:
        warnings.warn("hyperparameter optimization did not improve on the initial values",
                      RuntimeWarning, stacklevel=2)
        return OptimizationResult(init, -float(f0), -float(f0), False, evaluations, history)
    return OptimizationResult(expand(best_theta), -best_f, -float(f0), True, evaluations, history)
