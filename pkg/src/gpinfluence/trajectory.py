"""Per-agent GP over time and inferred accelerations along each path."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp
from .errors import InputError
from .gp import GaussianScalar, GpModel, OptimizerConfig
from .kernel import KernelHyperparams

MIN_SAMPLES = 4


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Timestamped planar samples of one agent, ordered by strictly increasing ``t``."""

    agent_id: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t, x, y = (np.asarray(v, dtype=float).ravel() for v in (self.t, self.x, self.y))
        if not (t.shape == x.shape == y.shape):
            raise InputError(f"agent {self.agent_id}: t, x, y lengths differ")
        if t.size < MIN_SAMPLES:
            raise InputError(
                f"agent {self.agent_id}: {t.size} samples, at least {MIN_SAMPLES} required"
            )
        if np.any(np.diff(t) <= 0):
            raise InputError(f"agent {self.agent_id}: times must be strictly increasing")
        if not np.all(np.isfinite(np.concatenate([t, x, y]))):
            raise InputError(f"agent {self.agent_id}: non-finite sample")
        object.__setattr__(self, "agent_id", str(self.agent_id))
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.t.size


@dataclass(frozen=True, eq=False)
class TrajectoryModel:
    """Independent time GPs for each axis.

    Each axis is centred on its own mean before fitting (``x_offset``,
    ``y_offset``); offsets do not affect time derivatives.
    """

    agent_id: str
    trajectory: Trajectory
    gp_x: GpModel
    gp_y: GpModel
    x_offset: float = 0.0
    y_offset: float = 0.0

    def predict_position(self, t):
        """Posterior means of (x, y) at arbitrary times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        mx, _ = self.gp_x.predict_linear(t)
        my, _ = self.gp_y.predict_linear(t)
        return mx + self.x_offset, my + self.y_offset

    def predict_acceleration(self, t):
        """Posterior (mean, variance) of the second time derivative per axis."""
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        return self.gp_x.predict_linear(t, (0, 0)), self.gp_y.predict_linear(t, (0, 0))


@dataclass(frozen=True)
class AccelerationSample:
    t: float
    x: float
    y: float
    ax: GaussianScalar
    ay: GaussianScalar


def default_hyperparams(values: np.ndarray, t: np.ndarray) -> KernelHyperparams:
    """Data-scaled starting point for one axis of a trajectory GP."""
    scale = float(np.std(values))
    if scale <= 0.0:
        scale = 1.0
    span = float(t[-1] - t[0])
    return KernelHyperparams(scale, (span / 10.0,), 1e-2 * scale)


def _fit_axis(t, values, init, optimize, config):
    centred = values - values.mean()
    if init is None:
        init = default_hyperparams(values, t)
    if optimize:
        init = gp.optimize_hyperparameters(t[:, None], centred, init, config).hyperparams
    return gp.fit(t[:, None], centred, init), float(values.mean())


def fit_trajectory(traj: Trajectory, init: KernelHyperparams | tuple | None = None,
                   optimize: bool = True,
                   config: OptimizerConfig | None = None) -> TrajectoryModel:
    """Fit x(t) and y(t) with separately learned hyperparameters.

    ``init`` may be one set of hyperparameters used to start both axes, a
    pair ``(init_x, init_y)``, or None for data-scaled defaults.
    """
    if isinstance(init, tuple) and len(init) == 2 and not isinstance(init, KernelHyperparams):
        init_x, init_y = init
    else:
        init_x = init_y = init
    for hp in (init_x, init_y):
        if hp is not None and hp.ndim != 1:
            raise InputError("trajectory kernels take one input (time)")
    gp_x, ox = _fit_axis(traj.t, traj.x, init_x, optimize, config)
    gp_y, oy = _fit_axis(traj.t, traj.y, init_y, optimize, config)
    return TrajectoryModel(traj.agent_id, traj, gp_x, gp_y, ox, oy)


def infer_accelerations(model: TrajectoryModel) -> list[AccelerationSample]:
    """Second time-derivative posteriors at every training time stamp."""
    traj = model.trajectory
    (mx, vx), (my, vy) = model.predict_acceleration(traj.t)
    return [
        AccelerationSample(float(t), float(x), float(y),
                           GaussianScalar(float(a), float(va)),
                           GaussianScalar(float(b), float(vb)))
        for t, x, y, a, va, b, vb in zip(traj.t, traj.x, traj.y, mx, vx, my, vy)
    ]


def trim_endpoints(samples: list[AccelerationSample], count: int = 2) -> list[AccelerationSample]:
    """Drop ``count`` samples from each end of one agent's acceleration list."""
    if count <= 0:
        return list(samples)
    return list(samples[count:len(samples) - count])
