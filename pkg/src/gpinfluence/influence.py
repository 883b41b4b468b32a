"""Signed KL influence scores on spatial lattices."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .field import FieldModel, laplacian_posterior, prior_laplacian_variance
from .gp import GaussianScalar

WORKERS_ENV = "GPINFLUENCE_WORKERS"
# posterior variances are floored at this fraction of the prior before the KL
VARIANCE_FLOOR = 1e-12


def kl_gaussian(prior: GaussianScalar, posterior: GaussianScalar):
    """``KL(prior || posterior)`` between univariate normals.

    ``1/2 (s_pr^2/s_po^2 + (m_po - m_pr)^2/s_po^2 - 1 + ln(s_po^2/s_pr^2))``
    """
    v_pr = np.asarray(prior.variance, dtype=float)
    v_po = np.asarray(posterior.variance, dtype=float)
    if np.any(v_pr <= 0) or np.any(v_po <= 0):
        raise InputError("KL divergence needs strictly positive variances")
    diff = np.asarray(posterior.mean, dtype=float) - np.asarray(prior.mean, dtype=float)
    kl = 0.5 * (v_pr / v_po + diff * diff / v_po - 1.0 + np.log(v_po / v_pr))
    kl = np.maximum(kl, 0.0)
    return float(kl) if kl.ndim == 0 else kl


def _signed(lap: GaussianScalar, prior_var: float):
    var = np.maximum(np.asarray(lap.variance, dtype=float), VARIANCE_FLOOR * prior_var)
    kl = kl_gaussian(GaussianScalar(0.0, prior_var), GaussianScalar(lap.mean, var))
    return np.sign(lap.mean) * kl


def signed_kl(model: FieldModel, x, y, t, prior_var: float | None = None):
    """Sign of the posterior Laplacian mean times its KL from the zero-mean prior.

    Negative values mark attractors (sinks), positive values repellers.
    """
    if prior_var is None:
        prior_var = prior_laplacian_variance(model)
    out = _signed(laplacian_posterior(model, x, y, t), prior_var)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GridSpec:
    x_bounds: tuple[float, float]
    y_bounds: tuple[float, float]
    nx: int
    ny: int
    times: tuple[float, ...]

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise InputError(f"grid needs nx, ny >= 2, got {self.nx} x {self.ny}")
        times = tuple(float(t) for t in np.atleast_1d(self.times))
        if not times:
            raise InputError("grid needs at least one time")
        for lo, hi in (self.x_bounds, self.y_bounds):
            if not hi > lo:
                raise InputError(f"empty bounds ({lo}, {hi})")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "x_bounds", tuple(map(float, self.x_bounds)))
        object.__setattr__(self, "y_bounds", tuple(map(float, self.y_bounds)))

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_bounds, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(*self.y_bounds, self.ny)

    def shifted(self, dx: float, dy: float, scale: float = 1.0) -> "GridSpec":
        """Bounds mapped through ``(v - d) / scale``."""
        return GridSpec(
            tuple((v - dx) / scale for v in self.x_bounds),
            tuple((v - dy) / scale for v in self.y_bounds),
            self.nx, self.ny, self.times,
        )


@dataclass(frozen=True, eq=False)
class InfluenceGrid:
    """Per-frame Laplacian posterior and signed KL, arrays shaped (T, ny, nx)."""

    x_bounds: tuple[float, float]
    y_bounds: tuple[float, float]
    nx: int
    ny: int
    times: np.ndarray
    lap_mean: np.ndarray
    lap_var: np.ndarray
    signed_kl: np.ndarray
    prior_var: float = float("nan")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_bounds, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(*self.y_bounds, self.ny)

    def frame_argmin(self, values: np.ndarray) -> tuple[float, float]:
        iy, ix = np.unravel_index(np.argmin(values), values.shape)
        return float(self.xs[ix]), float(self.ys[iy])


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer") from None


def build_grid(model: FieldModel, spec: GridSpec, workers: int | None = None) -> InfluenceGrid:
    """Evaluate the Laplacian posterior and signed KL on every lattice point.

    Frames are computed independently, so the result does not depend on the
    number of workers.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    gx, gy = np.meshgrid(spec.xs, spec.ys)
    prior_var = prior_laplacian_variance(model)

    def frame(t):
        lap = laplacian_posterior(model, gx, gy, t)
        return lap.mean, lap.variance, _signed(lap, prior_var)

    if workers == 1:
        frames = [frame(t) for t in spec.times]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(frame, spec.times))
    lap_mean, lap_var, skl = (np.stack(parts) for parts in zip(*frames))
    return InfluenceGrid(spec.x_bounds, spec.y_bounds, spec.nx, spec.ny,
                         np.asarray(spec.times), lap_mean, lap_var, skl, prior_var)


def mean_over_time(grid: InfluenceGrid) -> np.ndarray:
    if grid.signed_kl.shape[0] < 1:
        raise InputError("grid has no time slices")
    return np.mean(grid.signed_kl, axis=0)


def local_minima(values: np.ndarray) -> list[tuple[float, int, int]]:
    """Strict minima over the 8-neighbourhood as ``(value, iy, ix)``, deepest first."""
    ny, nx = values.shape
    padded = np.pad(values, 1, constant_values=np.inf)
    is_min = np.ones_like(values, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            neighbour = padded[1 + dy:1 + dy + ny, 1 + dx:1 + dx + nx]
            is_min &= values < neighbour
    found = [(float(values[iy, ix]), int(iy), int(ix)) for iy, ix in zip(*np.nonzero(is_min))]
    return sorted(found)


def dominant_minima(values: np.ndarray, fraction: float = 0.25) -> list[tuple[float, int, int]]:
    """Negative local minima at least ``fraction`` as deep as the deepest one."""
    minima = [m for m in local_minima(values) if m[0] < 0]
    if not minima:
        return []
    cut = fraction * minima[0][0]
    return [m for m in minima if m[0] <= cut]
