import warnings

import numpy as np
import pytest

from gpinfluence import checks, gp
from gpinfluence.errors import InputError, NumericalError
from gpinfluence.gp import OptimizerConfig
from gpinfluence.kernel import KernelHyperparams


def brute_posterior(X, y, hp, Xs):
    """Dense textbook formulas with an explicit inverse."""
    def k(A, B):
        d = (A[:, None, :] - B[None, :, :]) / np.asarray(hp.length_scales)
        return hp.variance * np.exp(-0.5 * np.sum(d * d, axis=-1))
    C = k(X, X) + hp.noise_std ** 2 * np.eye(len(X))
    Ci = np.linalg.inv(C)
    Ks = k(Xs, X)
    return Ks @ Ci @ y, hp.variance - np.einsum("ij,jk,ik->i", Ks, Ci, Ks)


def test_posterior_matches_dense_formulas(rng):
    X = rng.uniform(-2, 2, (25, 2))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2
    hp = KernelHyperparams(1.3, (0.9, 1.4), 0.1)
    model = gp.fit(X, y, hp)
    Xs = rng.uniform(-2, 2, (15, 2))
    mean, var = model.predict_linear(Xs)
    ref_m, ref_v = brute_posterior(X, y, hp, Xs)
    np.testing.assert_allclose(mean, ref_m, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(var, ref_v, rtol=1e-6, atol=1e-10)


def test_noise_free_interpolates_training_points(rng):
    X = np.linspace(0, 3, 8)[:, None]
    y = np.cos(X[:, 0])
    model = gp.fit(X, y, KernelHyperparams(1.0, (0.7,)))
    for xi, yi in zip(X, y):
        p = gp.predict(model, xi)
        assert p.mean == pytest.approx(yi, abs=1e-6)
        assert p.variance < 1e-6


def test_far_from_data_returns_prior():
    model = gp.fit([[0.0]], [1.0], KernelHyperparams(2.0, (0.5,), 0.1))
    p = gp.predict(model, [100.0])
    assert p.mean == pytest.approx(0.0, abs=1e-300)
    assert p.variance == pytest.approx(4.0)


def test_derivative_of_linear_function_is_slope():
    X = np.linspace(-2, 2, 30)[:, None]
    model = gp.fit(X, 3.0 * X[:, 0], KernelHyperparams(5.0, (2.0,), 1e-4))
    assert gp.predict_derivative(model, [0.0], 1, 0).mean == pytest.approx(3.0, rel=1e-3)
    assert gp.predict_derivative(model, [0.0], 2, 0).mean == pytest.approx(0.0, abs=1e-2)


def test_derivative_posterior_matches_fd_of_mean(rng):
    X = rng.uniform(-2, 2, (20, 2))
    y = np.sin(X[:, 0]) * np.cos(X[:, 1])
    model = gp.fit(X, y, KernelHyperparams(1.0, (1.0, 0.8), 0.05))
    x = np.array([0.3, -0.4])
    f = lambda p: gp.predict(model, p).mean  # noqa: E731
    steps = np.array([1e-3, 1e-3])
    for dim in (0, 1):
        assert gp.predict_derivative(model, x, 1, dim).mean == pytest.approx(
            checks.central_difference(f, x, (dim,), steps), rel=1e-6, abs=1e-9)
        assert gp.predict_derivative(model, x, 2, dim).mean == pytest.approx(
            checks.central_difference(f, x, (dim, dim), steps), rel=1e-5, abs=1e-7)


def test_prior_model_variance_of_derivatives():
    hp = KernelHyperparams(2.0, (0.5,))
    model = gp.prior_model(hp)
    assert gp.predict_derivative(model, [0.3], 1, 0).variance == 4.0 / 0.25
    assert gp.predict_derivative(model, [0.3], 2, 0).variance == pytest.approx(3 * 4.0 / 0.5 ** 4)


def test_duplicate_inputs_without_noise_rejected():
    with pytest.raises(NumericalError):
        gp.fit([[0.0], [0.0], [1.0]], [1.0, 1.0, 2.0], KernelHyperparams(1.0, (1.0,)))


def test_duplicate_inputs_with_noise_accepted():
    model = gp.fit([[0.0], [0.0], [1.0]], [1.0, 1.2, 2.0], KernelHyperparams(1.0, (1.0,), 0.1))
    assert gp.predict(model, [0.0]).mean == pytest.approx(1.1, abs=0.1)


def test_near_duplicates_need_jitter():
    X = np.array([[0.0], [1e-9], [1.0]])
    model = gp.fit(X, [0.0, 0.0, 1.0], KernelHyperparams(1.0, (1.0,)))
    assert model.jitter > 0


@pytest.mark.parametrize("X,y", [([[0.0], [1.0]], [1.0]), ([[np.nan]], [1.0]), (np.zeros((0, 1)), [])])
def test_fit_input_errors(X, y):
    with pytest.raises(InputError):
        gp.fit(X, y, KernelHyperparams(1.0, (1.0,), 0.1))


def test_derivative_order_validation():
    model = gp.prior_model(KernelHyperparams(1.0, (1.0,)))
    with pytest.raises(InputError):
        gp.predict_derivative(model, [0.0], 3, 0)


def test_lml_matches_dense_gaussian_density(rng):
    from scipy.stats import multivariate_normal
    X = rng.uniform(-1, 1, (12, 2))
    y = rng.normal(size=12)
    hp = KernelHyperparams(0.8, (0.5, 1.5), 0.3)
    model = gp.fit(X, y, hp)
    d = (X[:, None] - X[None]) / np.asarray(hp.length_scales)
    C = hp.variance * np.exp(-0.5 * np.sum(d * d, -1)) + hp.noise_std ** 2 * np.eye(12)
    assert gp.log_marginal_likelihood(model) == pytest.approx(
        multivariate_normal(np.zeros(12), C).logpdf(y), rel=1e-8)  # jitter is part of the model


def test_lml_gradient_matches_fd(rng):
    X, y, hp = checks.random_regression_problem(rng)
    _, g = gp.log_marginal_likelihood(gp.fit(X, y, hp), gradient=True)
    np.testing.assert_allclose(g, checks.lml_fd_gradient(X, y, hp), rtol=1e-5, atol=1e-5)


def test_optimizer_improves_and_is_deterministic(rng):
    X = np.linspace(0, 6, 40)[:, None]
    y = np.sin(X[:, 0]) + 0.05 * rng.standard_normal(40)
    init = KernelHyperparams(0.2, (5.0,), 0.5)
    r1 = gp.optimize_hyperparameters(X, y, init, OptimizerConfig(restarts=3, seed=1))
    r2 = gp.optimize_hyperparameters(X, y, init, OptimizerConfig(restarts=3, seed=1))
    assert r1.improved and r1.log_likelihood > r1.initial_log_likelihood
    assert r1.hyperparams == r2.hyperparams
    assert 0.5 < r1.hyperparams.length_scales[0] < 3.0
    assert r1.hyperparams.noise_std < 0.2


def test_optimizer_respects_masks(rng):
    X = np.linspace(0, 6, 30)[:, None]
    y = np.sin(X[:, 0])
    init = KernelHyperparams(1.0, (1.0,), 0.1)
    cfg = OptimizerConfig(restarts=2, optimize_noise=False, optimize_length_scales=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = gp.optimize_hyperparameters(X, y, init, cfg)
    assert res.hyperparams.noise_std == 0.1
    assert res.hyperparams.length_scales == (1.0,)


def test_optimizer_returns_init_when_already_optimal(rng):
    X = np.linspace(0, 6, 30)[:, None]
    y = np.sin(X[:, 0]) + 0.05 * rng.standard_normal(30)
    best = gp.optimize_hyperparameters(X, y, KernelHyperparams(1.0, (1.0,), 0.1)).hyperparams
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        again = gp.optimize_hyperparameters(X, y, best, OptimizerConfig(restarts=1))
    assert again.log_likelihood >= again.initial_log_likelihood
    if not again.improved:
        assert again.hyperparams == best
        assert any("did not improve" in str(w.message) for w in caught)


def test_model_is_immutable(rng):
    model = gp.fit([[0.0], [1.0]], [0.0, 1.0], KernelHyperparams(1.0, (1.0,), 0.1))
    with pytest.raises(Exception):
        model.targets = np.zeros(2)
