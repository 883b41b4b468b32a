import numpy as np
import pytest

from gpinfluence.errors import InputError
from gpinfluence.kernel import KernelHyperparams
from gpinfluence.trajectory import (Trajectory, default_hyperparams, fit_trajectory,
                                    infer_accelerations, trim_endpoints)


def circle(n=120, span=4 * np.pi):
    t = np.linspace(0, span, n)
    return Trajectory("c", t, 3 + np.cos(t), -2 + np.sin(t))


def test_validation():
    with pytest.raises(InputError):
        Trajectory("a", [0, 1, 2], [0, 0, 0], [0, 0, 0])
    with pytest.raises(InputError):
        Trajectory("a", [0, 1, 1, 2], [0] * 4, [0] * 4)
    with pytest.raises(InputError):
        Trajectory("a", [0, 1, 2, 3], [0] * 4, [0] * 3)
    with pytest.raises(InputError):
        Trajectory("a", [0, 1, 2, 3], [0, np.inf, 0, 0], [0] * 4)


def test_constant_velocity_has_zero_acceleration():
    t = np.linspace(0, 10, 50)
    tr = Trajectory("line", t, 1 + 0.5 * t, 2 - 0.3 * t)
    model = fit_trajectory(tr, KernelHyperparams(5.0, (4.0,), 1e-3), optimize=False)
    acc = trim_endpoints(infer_accelerations(model))
    assert max(abs(s.ax.mean) for s in acc) < 5e-3
    assert max(abs(s.ay.mean) for s in acc) < 5e-3


def test_circle_acceleration_points_inward():
    tr = circle()
    model = fit_trajectory(tr)
    acc = trim_endpoints(infer_accelerations(model), 5)
    ax = np.array([s.ax.mean for s in acc])
    ay = np.array([s.ay.mean for s in acc])
    # centripetal acceleration of a unit circle at unit angular speed: -(x - cx, y - cy)
    ref_x = -np.array([s.x - 3 for s in acc])
    ref_y = -np.array([s.y + 2 for s in acc])
    assert np.max(np.abs(ax - ref_x)) < 0.02
    assert np.max(np.abs(ay - ref_y)) < 0.02


def test_offsets_do_not_change_accelerations():
    tr = circle(60)
    shifted = Trajectory("s", tr.t, tr.x + 100.0, tr.y - 50.0)
    hp = KernelHyperparams(1.0, (1.0,), 1e-3)
    a = infer_accelerations(fit_trajectory(tr, hp, optimize=False))
    b = infer_accelerations(fit_trajectory(shifted, hp, optimize=False))
    np.testing.assert_allclose([s.ax.mean for s in a], [s.ax.mean for s in b], atol=1e-9)
    pos = fit_trajectory(shifted, hp, optimize=False).predict_position(tr.t[10])
    assert pos[0][0] == pytest.approx(shifted.x[10], abs=1e-3)


def test_per_axis_init_pair_and_dimension_check():
    tr = circle(40)
    hx, hy = KernelHyperparams(1.0, (1.0,), 0.01), KernelHyperparams(2.0, (0.5,), 0.02)
    m = fit_trajectory(tr, (hx, hy), optimize=False)
    assert m.gp_x.hyperparams == hx and m.gp_y.hyperparams == hy
    with pytest.raises(InputError):
        fit_trajectory(tr, KernelHyperparams(1.0, (1.0, 1.0)), optimize=False)


def test_endpoint_variance_exceeds_interior():
    tr = circle(80)
    acc = infer_accelerations(fit_trajectory(tr))
    var = np.array([s.ax.variance for s in acc])
    assert var[0] > np.median(var) and var[-1] > np.median(var)


def test_trim_endpoints():
    items = list(range(10))
    assert trim_endpoints(items, 2) == list(range(2, 8))
    assert trim_endpoints(items, 0) == items
    assert trim_endpoints(items[:3], 2) == []


def test_default_hyperparams_scale_with_data():
    t = np.linspace(0, 20, 11)
    hp = default_hyperparams(10 * np.sin(t), t)
    assert hp.length_scales == (2.0,)
    assert hp.noise_std == pytest.approx(0.01 * hp.output_scale)
