import warnings

import numpy as np
import pytest

from gpinfluence.errors import InputError
from gpinfluence.field import (curl_z, divergence, fit_field, laplacian_posterior, pool_samples,
                               predict_derivatives, predict_vector, prior_field,
                               prior_laplacian_variance)
from gpinfluence.gp import GaussianScalar
from gpinfluence.kernel import KernelHyperparams
from gpinfluence.trajectory import AccelerationSample

HP = KernelHyperparams(2.0, (1.5, 1.5, 3.0), 1e-4)


def samples_of(fn, n=7):
    g = np.linspace(-1.5, 1.5, n)
    out = []
    for t in (0.0, 1.0):
        for x in g:
            for y in g:
                vx, vy = fn(x, y)
                out.append(AccelerationSample(t, x, y, GaussianScalar(vx, 0.0), GaussianScalar(vy, 0.0)))
    return out


def test_rotation_field_derivatives():
    model = fit_field(samples_of(lambda x, y: (y, -x)), HP, HP, optimize=False)
    d = predict_derivatives(model, 0.2, -0.1, 0.5)
    assert d.vx.mean == pytest.approx(-0.1, abs=5e-3)
    assert d.vy.mean == pytest.approx(-0.2, abs=5e-3)
    assert d.dvx_dy.mean == pytest.approx(1.0, abs=3e-2)
    assert d.dvy_dx.mean == pytest.approx(-1.0, abs=3e-2)
    assert d.dvx_dx.mean == pytest.approx(0.0, abs=1e-2)
    assert curl_z(model, 0.0, 0.0, 0.5).mean == pytest.approx(-2.0, rel=0.03)
    assert divergence(model, 0.0, 0.0, 0.5).mean == pytest.approx(0.0, abs=0.02)


def test_grid_shaped_evaluation_matches_pointwise():
    model = fit_field(samples_of(lambda x, y: (x * y, x - y), 5), HP, HP, optimize=False)
    gx, gy = np.meshgrid(np.linspace(-1, 1, 4), np.linspace(-1, 1, 3))
    lap = laplacian_posterior(model, gx, gy, 0.5)
    assert lap.mean.shape == (3, 4)
    single = laplacian_posterior(model, gx[1, 2], gy[1, 2], 0.5)
    assert isinstance(single.mean, float)
    assert lap.mean[1, 2] == pytest.approx(single.mean, rel=1e-12)
    assert lap.variance[1, 2] == pytest.approx(single.variance, rel=1e-12)
    vx, vy = predict_vector(model, gx, gy, 0.5)
    assert vx.mean.shape == (3, 4)


def test_prior_laplacian_variance_formula():
    hx = KernelHyperparams(1.5, (0.7, 2.0, 1.0))
    hy = KernelHyperparams(0.4, (1.1, 0.3, 1.0))
    model = prior_field(hx, hy)
    expected = 1.5 ** 2 / 0.7 ** 2 + 0.4 ** 2 / 0.3 ** 2
    assert prior_laplacian_variance(model) == expected
    assert laplacian_posterior(model, 3.0, -2.0, 7.0).variance == expected


def test_data_shrinks_laplacian_variance():
    model = fit_field(samples_of(lambda x, y: (x, y)), HP, HP, optimize=False)
    near = laplacian_posterior(model, 0.0, 0.0, 0.5).variance
    far = laplacian_posterior(model, 30.0, 30.0, 0.5).variance
    assert near < 0.01 * prior_laplacian_variance(model)
    assert far == pytest.approx(prior_laplacian_variance(model), rel=1e-9)


def test_pool_samples_averages_duplicates():
    s = [AccelerationSample(0.0, 1.0, 2.0, GaussianScalar(1.0, 0), GaussianScalar(3.0, 0)),
         AccelerationSample(0.0, 1.0, 2.0, GaussianScalar(3.0, 0), GaussianScalar(5.0, 0)),
         AccelerationSample(1.0, 1.0, 2.0, GaussianScalar(0.0, 0), GaussianScalar(0.0, 0))]
    with pytest.warns(RuntimeWarning, match="duplicate"):
        X, ax, ay = pool_samples(s)
    assert X.shape == (2, 3)
    assert ax[0] == 2.0 and ay[0] == 4.0


def test_default_init_and_optimize_path():
    samples = samples_of(lambda x, y: (np.sin(x), np.cos(y)), 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = fit_field(samples)
    assert model.gp_vx.hyperparams.ndim == 3


def test_field_errors():
    with pytest.raises(InputError):
        fit_field(samples_of(lambda x, y: (x, y))[:3])
    with pytest.raises(InputError):
        fit_field(samples_of(lambda x, y: (x, y)), KernelHyperparams(1.0, (1.0,)), optimize=False)
