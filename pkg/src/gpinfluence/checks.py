"""Self-check suites: finite-difference and Monte-Carlo oracles for the numerics.

Each suite returns a :class:`CheckResult`. Derivative errors are relative to
``max(|reference|, natural scale)`` where the natural scale of a kernel
derivative of total order ``n_d`` per dimension is ``l^2 / prod lambda_d^n_d``;
this keeps the comparison meaningful where a derivative crosses zero.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import gp
from .field import laplacian_posterior, prior_field, prior_laplacian_variance
from .gp import GaussianScalar, OptimizerConfig
from .influence import kl_gaussian, signed_kl
from .kernel import (BACKEND, KernelHyperparams, derivative_counts, kernel_matrix,
                     se_kernel, se_kernel_grad, se_kernel_hess)
from .synthetic import (AgentState, SimConfig, UtilityParams, agent_step, integrate,
                        utility, utility_grad, utility_laplacian)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst {self.worst:.3e} (tolerance {self.tolerance:.1e}) {self.detail}".rstrip()


def random_hyperparams(rng, ndim: int, noise: float = 0.0) -> KernelHyperparams:
    return KernelHyperparams(
        output_scale=float(rng.uniform(0.5, 2.0)),
        length_scales=tuple(np.exp(rng.uniform(np.log(0.3), np.log(3.0), ndim))),
        noise_std=noise,
    )


def _natural_scale(hp: KernelHyperparams, da, db) -> float:
    counts = derivative_counts(da, hp.ndim) + derivative_counts(db, hp.ndim)
    return hp.variance / float(np.prod(np.asarray(hp.length_scales) ** counts))


def _analytic_in_a(a, b, hp, da):
    """Closed-form kernel, gradient entry, or Hessian entry with respect to ``a``."""
    if len(da) == 0:
        return se_kernel(a, b, hp)
    if len(da) == 1:
        return float(se_kernel_grad(a, b, hp)[da[0]])
    return float(se_kernel_hess(a, b, hp)[da[0], da[1]])


_D1 = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))  # /(12 h)
_D2 = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))  # /(12 h^2)
_STEP = 1e-3


def central_difference(f, x, dims, steps):
    """Fourth-order central difference of ``f`` at ``x`` along ``dims`` (at most two).

    Repeated dimensions use the second-derivative stencil; distinct ones
    nest the first-derivative stencil.
    """
    x = np.asarray(x, dtype=float)
    if len(dims) == 0:
        return f(x)
    if len(dims) == 2 and dims[0] == dims[1]:
        d, h = dims[0], steps[dims[0]]
        e = np.zeros_like(x)
        e[d] = h
        return sum(w * f(x + k * e) for k, w in _D2) / (12 * h * h)
    d, h = dims[0], steps[dims[0]]
    e = np.zeros_like(x)
    e[d] = h
    rest = dims[1:]
    return sum(w * central_difference(f, x + k * e, rest, steps) for k, w in _D1) / (12 * h)


def fd_reference(a, b, hp: KernelHyperparams, da=(), db=()) -> float:
    """Derivative in ``b`` by central differences of the closed forms in ``a``.

    Derivatives in ``a`` come from the direct kernel/gradient/Hessian
    formulas; up to two derivatives in ``b`` are taken numerically.
    """
    a = np.asarray(a, dtype=float)
    steps = _STEP * np.asarray(hp.length_scales)
    return central_difference(lambda bb: _analytic_in_a(a, bb, hp, da), b, tuple(db), steps)


def fd_kernel_derivatives(a, b, hp: KernelHyperparams):
    """Central differences of the plain kernel: gradient and Hessian in ``a``."""
    D = hp.ndim
    steps = _STEP * np.asarray(hp.length_scales)

    def f(aa):
        return se_kernel(aa, b, hp)

    grad = np.array([central_difference(f, a, (d,), steps) for d in range(D)])
    hess = np.array([[central_difference(f, a, (d, c), steps) for c in range(D)] for d in range(D)])
    return grad, hess


def derivative_indices(ndim: int, max_order: int = 2):
    out = [()]
    for order in range(1, max_order + 1):
        out.extend(itertools.combinations_with_replacement(range(ndim), order))
    return out


def check_kernel_derivatives(n_pairs: int = 1000, seed: int = 0, tol: float = 1e-6) -> CheckResult:
    """Gradient, Hessian and every mixed derivative against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    where = ""
    for i in range(n_pairs):
        D = int(rng.integers(1, 4))
        hp = random_hyperparams(rng, D)
        a = rng.normal(0.0, 2.0, D)
        b = a + rng.normal(0.0, 1.0, D) * np.asarray(hp.length_scales)
        grad_fd, hess_fd = fd_kernel_derivatives(a, b, hp)
        pairs = [(se_kernel_grad(a, b, hp), grad_fd, ((0,),)), (se_kernel_hess(a, b, hp), hess_fd, ((0, 0),))]
        for got, ref, (idx,) in pairs:
            scale = _natural_scale(hp, idx, ())
            err = float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), scale)))
            if err > worst:
                worst, where = err, f"pair {i} closed-form grad/hess"
        A, B = a[None, :], b[None, :]
        for da in derivative_indices(D):
            for db in derivative_indices(D):
                got = float(kernel_matrix(A, B, hp, da, db)[0, 0])
                ref = fd_reference(a, b, hp, da, db)
                err = abs(got - ref) / max(abs(ref), _natural_scale(hp, da, db))
                if err > worst:
                    worst, where = err, f"pair {i} da={da} db={db}"
    return CheckResult(f"kernel derivatives [{BACKEND}]", worst <= tol, worst, tol, where)


def random_regression_problem(rng, n: int = 10):
    D = int(rng.integers(1, 4))
    X = rng.uniform(-2.0, 2.0, (n, D))
    y = np.sin(X @ rng.normal(size=D)) + 0.1 * rng.standard_normal(n)
    hp = random_hyperparams(rng, D, noise=float(rng.uniform(0.05, 0.5)))
    return X, y, hp


def lml_fd_gradient(X, y, hp: KernelHyperparams, h: float = 1e-6) -> np.ndarray:
    theta = gp._pack(hp)
    out = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        up = gp.log_marginal_likelihood(gp.fit(X, y, gp._unpack(theta + e)))
        down = gp.log_marginal_likelihood(gp.fit(X, y, gp._unpack(theta - e)))
        out[i] = (up - down) / (2 * h)
    return out


def check_lml_gradient(n_problems: int = 20, seed: int = 0, tol: float = 1e-5) -> CheckResult:
    """Analytic evidence gradient vs central differences in log-parameters."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_problems):
        X, y, hp = random_regression_problem(rng)
        _, grad = gp.log_marginal_likelihood(gp.fit(X, y, hp), gradient=True)
        ref = lml_fd_gradient(X, y, hp)
        worst = max(worst, float(np.max(np.abs(grad - ref) / np.maximum(np.abs(ref), 1.0))))
    return CheckResult("log marginal likelihood gradient", worst <= tol, worst, tol)


def check_optimizer_monotone(n_problems: int = 20, seed: int = 0) -> CheckResult:
    """The optimized evidence is never below the starting evidence."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_problems):
        X, y, hp = random_regression_problem(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = gp.optimize_hyperparameters(X, y, hp, OptimizerConfig(restarts=3, seed=k))
        start = gp.log_marginal_likelihood(gp.fit(X, y, hp))
        end = gp.log_marginal_likelihood(gp.fit(X, y, res.hyperparams))
        worst = max(worst, start - end)
    return CheckResult("optimizer monotone", worst <= 0.0, worst, 0.0, "(largest decrease)")


def random_gaussian_pair(rng):
    prior = GaussianScalar(float(rng.normal(0, 1)), float(np.exp(rng.uniform(-1, 1))))
    post = GaussianScalar(float(rng.normal(0, 1)), float(prior.variance * np.exp(rng.uniform(-0.7, 0.7))))
    return prior, post


def monte_carlo_kl(prior: GaussianScalar, post: GaussianScalar, n: int, rng) -> float:
    """``E_prior[log prior(z) - log post(z)]`` from ``n`` prior draws."""
    z = prior.mean + np.sqrt(prior.variance) * rng.standard_normal(n)
    lp = -0.5 * (z - prior.mean) ** 2 / prior.variance - 0.5 * np.log(prior.variance)
    lq = -0.5 * (z - post.mean) ** 2 / post.variance - 0.5 * np.log(post.variance)
    return float(np.mean(lp - lq))


def check_kl_monte_carlo(n_pairs: int = 50, n_samples: int = 1_000_000, seed: int = 0,
                         tol: float = 1e-2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        prior, post = random_gaussian_pair(rng)
        worst = max(worst, abs(kl_gaussian(prior, post) - monte_carlo_kl(prior, post, n_samples, rng)))
        if kl_gaussian(prior, prior) != 0.0:
            return CheckResult("gaussian KL vs Monte Carlo", False, np.inf, tol, "KL(p, p) != 0")
    return CheckResult("gaussian KL vs Monte Carlo", worst <= tol, worst, tol)


def check_prior_laplacian(seed: int = 0) -> CheckResult:
    """A data-free field reports the exact prior Laplacian variance and zero signed KL."""
    rng = np.random.default_rng(seed)
    hx = random_hyperparams(rng, 3)
    hy = random_hyperparams(rng, 3)
    model = prior_field(hx, hy)
    expected = hx.variance / hx.length_scales[0] ** 2 + hy.variance / hy.length_scales[1] ** 2
    pts = rng.uniform(-3, 3, (50, 3))
    lap = laplacian_posterior(model, pts[:, 0], pts[:, 1], pts[:, 2])
    skl = signed_kl(model, pts[:, 0], pts[:, 1], pts[:, 2])
    worst = max(float(np.max(np.abs(lap.variance - expected))),
                abs(prior_laplacian_variance(model) - expected),
                float(np.max(np.abs(skl))))
    return CheckResult("prior Laplacian variance", worst == 0.0, worst, 0.0)


def check_synthetic_world(n_points: int = 200, seed: int = 0) -> list[CheckResult]:
    """Utility gradient/Laplacian vs differences of the utility, and one exact update."""
    rng = np.random.default_rng(seed)
    p = UtilityParams()
    worst_g = worst_l = 0.0
    for _ in range(n_points):
        x = rng.uniform(-4, 4, 2)
        t = float(rng.uniform(0, 20))
        u = float(utility(p, x, t))
        h = 1e-5
        fd_g = np.array([(utility(p, x + e, t) - utility(p, x - e, t)) / (2 * h) for e in np.eye(2) * h])
        g = utility_grad(p, x, t)
        worst_g = max(worst_g, float(np.max(np.abs(g - fd_g) / np.maximum(np.abs(fd_g), u))))
        h = 1e-4
        fd_l = sum((utility(p, x + e, t) - 2 * u + utility(p, x - e, t)) / (h * h) for e in np.eye(2) * h)
        lap = float(utility_laplacian(p, x, t))
        worst_l = max(worst_l, abs(lap - fd_l) / max(abs(fd_l), u))

    g = np.array([0.3, -0.7])
    x0, v0, eta = np.array([1.0, 2.0]), np.array([0.25, -0.5]), 0.1
    cfg = SimConfig(eta=eta, noise_std=0.0, steps=2, starts=(tuple(x0),), start_velocities=(tuple(v0),))
    run = integrate(lambda x, t: g, cfg)[0]
    v1 = v0 + eta * g
    x1 = x0 + eta * v1
    direct = agent_step(AgentState(x0, v0, np.zeros(2)), g, eta)
    exact = (np.array_equal(run[1].position, x1) and np.array_equal(run[1].velocity, v1)
             and np.array_equal(direct.position, x1))
    return [
        CheckResult("utility gradient", worst_g <= 1e-6, worst_g, 1e-6),
        CheckResult("utility Laplacian", worst_l <= 1e-4, worst_l, 1e-4),
        CheckResult("one-step update", exact, 0.0 if exact else 1.0, 0.0),
    ]


def run_all(seed: int = 0, quick: bool = False) -> list[CheckResult]:
    """Every suite; ``quick`` shrinks sample counts for a fast smoke run."""
    scale = 10 if quick else 1
    results = [
        check_kernel_derivatives(1000 // scale, seed),
        check_lml_gradient(20 // (2 if quick else 1), seed),
        check_optimizer_monotone(20 // (4 if quick else 1), seed),
        check_kl_monte_carlo(50 // (5 if quick else 1), 1_000_000 // scale, seed,
                             tol=3e-2 if quick else 1e-2),
        check_prior_laplacian(seed),
    ]
    results.extend(check_synthetic_world(seed=seed))
    return results
