"""Ground-truth world: a time-varying two-Gaussian utility and Newtonian agents.

Component 1 has covariance ``(sin t + a) I`` around ``mu1`` and component 2
``(cos t + b) I`` around ``mu2``. The utility is the plain sum of the two
densities.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .trajectory import Trajectory

DEFAULT_STARTS = ((2.0, 1.0), (2.0, -1.0), (-2.0, 1.0), (-2.0, -1.0))


@dataclass(frozen=True)
class UtilityParams:
    mu1: tuple[float, float] = (-1.5, 0.0)
    mu2: tuple[float, float] = (1.5, 0.0)
    a: float = 2.1
    b: float = 2.1

    def __post_init__(self):
        if not (self.a > 1 and self.b > 1):
            raise InputError(f"need a > 1 and b > 1 for positive variances, got {self.a}, {self.b}")
        object.__setattr__(self, "mu1", tuple(float(v) for v in self.mu1))
        object.__setattr__(self, "mu2", tuple(float(v) for v in self.mu2))

    def components(self, t):
        """Yield ``(mean, variance)`` for each component at time ``t``."""
        yield np.asarray(self.mu1), np.sin(t) + self.a
        yield np.asarray(self.mu2), np.cos(t) + self.b


@dataclass
class AgentState:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


@dataclass(frozen=True)
class SimConfig:
    eta: float = 0.05
    noise_std: float = 0.01
    steps: int = 200
    seed: int = 0
    starts: tuple = DEFAULT_STARTS
    start_velocities: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise InputError("eta must be positive")
        if self.steps < 1:
            raise InputError("steps must be at least 1")
        if self.noise_std < 0:
            raise InputError("noise_std must be non-negative")


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def _density(px, py, m, var):
    dx, dy = px - m[0], py - m[1]
    return np.exp(-0.5 * (dx * dx + dy * dy) / var) / (2.0 * np.pi * var)


def utility(p: UtilityParams, x, t):
    """Utility at point(s) ``x`` (last axis of length 2) and time ``t``."""
    px, py = _split(x)
    return sum(_density(px, py, m, var) for m, var in p.components(t))


def utility_grad(p: UtilityParams, x, t):
    """Sum over components of ``-p_c(x) Sigma_c^-1 (x - mu_c)``."""
    px, py = _split(x)
    gx = gy = 0.0
    for m, var in p.components(t):
        dens = _density(px, py, m, var)
        gx = gx - dens * (px - m[0]) / var
        gy = gy - dens * (py - m[1]) / var
    return np.stack(np.broadcast_arrays(gx, gy), axis=-1)


def utility_laplacian(p: UtilityParams, x, t):
    """Trace of the summed component Hessians ``p (S r r^T S - S)``."""
    px, py = _split(x)
    total = 0.0
    for m, var in p.components(t):
        dx, dy = px - m[0], py - m[1]
        total = total + _density(px, py, m, var) * ((dx * dx + dy * dy) / var ** 2 - 2.0 / var)
    return total


def dominant_attractor(p: UtilityParams, t, x_bounds=(-4.0, 4.0), y_bounds=(-4.0, 4.0),
                       nx: int = 40, ny: int = 40):
    """Grid location of the global minimum of the true Laplacian at ``t``."""
    xs = np.linspace(*x_bounds, nx)
    ys = np.linspace(*y_bounds, ny)
    gx, gy = np.meshgrid(xs, ys)
    lap = utility_laplacian(p, np.stack([gx, gy], axis=-1), t)
    iy, ix = np.unravel_index(np.argmin(lap), lap.shape)
    return float(xs[ix]), float(ys[iy])


def agent_step(state: AgentState, grad, eta: float, noise=0.0) -> AgentState:
    """One explicit update: acceleration, then velocity, then position."""
    acc = np.asarray(grad, dtype=float) + noise
    vel = state.velocity + eta * acc
    pos = state.position + eta * vel
    return AgentState(pos, vel, acc)


def integrate(grad_fn, cfg: SimConfig) -> list[list[AgentState]]:
    """Run every agent for ``cfg.steps`` samples under ``grad_fn(x, t)``.

    Sample ``i`` is the state at time ``i * eta``; the gradient evaluated at
    sample ``i`` drives the move to sample ``i + 1``. Each agent draws noise
    from its own child seed so results do not depend on agent ordering.
    """
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.starts))
    velocities = cfg.start_velocities or [(0.0, 0.0)] * len(cfg.starts)
    runs = []
    for start, v0, seed in zip(cfg.starts, velocities, seeds):
        rng = np.random.default_rng(seed)
        state = AgentState(np.asarray(start, dtype=float), np.asarray(v0, dtype=float), np.zeros(2))
        states = [state]
        for i in range(cfg.steps - 1):
            noise = cfg.noise_std * rng.standard_normal(2) if cfg.noise_std > 0 else 0.0
            state = agent_step(state, grad_fn(state.position, i * cfg.eta), cfg.eta, noise)
            states.append(state)
        runs.append(states)
    return runs


def simulate(p: UtilityParams, cfg: SimConfig) -> list[Trajectory]:
    """Agents ascending the utility; one trajectory per start position."""
    runs = integrate(lambda x, t: utility_grad(p, x, t), cfg)
    times = np.arange(cfg.steps) * cfg.eta
    trajs = []
    for k, states in enumerate(runs):
        pos = np.array([s.position for s in states])
        trajs.append(Trajectory(f"agent{k}", times.copy(), pos[:, 0], pos[:, 1]))
    return trajs
