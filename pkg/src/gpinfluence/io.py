"""Trajectory and grid files, coordinate normalization, and heatmap images.

Trajectory files are UTF-8 CSV with header ``agent_id,t,x,y``. Grid files
have header ``t,x,y,lap_mean,lap_var,signed_kl`` with rows ordered by time,
then y, then x, and values written with 17 significant digits.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .influence import InfluenceGrid
from .trajectory import MIN_SAMPLES, Trajectory

TRAJECTORY_HEADER = ("agent_id", "t", "x", "y")
GRID_HEADER = ("t", "x", "y", "lap_mean", "lap_var", "signed_kl")
MEAN_MAP_HEADER = ("x", "y", "mean_signed_kl")


def _fmt(v) -> str:
    return format(float(v), ".17g")


def load_trajectories(path) -> list[Trajectory]:
    """Read a trajectory CSV, grouping rows by agent in order of first appearance.

    Rows are sorted by time within each agent. Repeated time stamps for one
    agent are rejected. Agents with fewer than four samples are skipped with
    a warning.
    """
    rows: dict[str, list[tuple[float, float, float, int]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRAJECTORY_HEADER:
            raise InputError(f"{path}:1: expected header {','.join(TRAJECTORY_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                t, x, y = (float(c) for c in row[1:])
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if not all(np.isfinite((t, x, y))):
                raise InputError(f"{path}:{lineno}: non-finite value in {row}")
            rows.setdefault(row[0].strip(), []).append((t, x, y, lineno))

    trajs = []
    for agent, samples in rows.items():
        samples.sort(key=lambda s: s[0])
        for prev, cur in zip(samples, samples[1:]):
            if prev[0] == cur[0]:
                raise InputError(
                    f"{path}:{cur[3]}: agent {agent} repeats time {cur[0]} (first at line {prev[3]})"
                )
        if len(samples) < MIN_SAMPLES:
            warnings.warn(f"agent {agent} has {len(samples)} samples (< {MIN_SAMPLES}); skipped",
                          RuntimeWarning, stacklevel=2)
            continue
        arr = np.array([s[:3] for s in samples])
        trajs.append(Trajectory(agent, arr[:, 0], arr[:, 1], arr[:, 2]))
    return trajs


def save_trajectories(trajs, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for tr in trajs:
            for t, x, y in zip(tr.t, tr.x, tr.y):
                writer.writerow((tr.agent_id, _fmt(t), _fmt(x), _fmt(y)))


@dataclass(frozen=True)
class Normalization:
    """Affine map ``v' = (v - offset) / scale`` applied to both axes."""

    x_offset: float = 0.0
    y_offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale == 0 or not np.isfinite(self.scale):
            raise InputError("normalization scale must be finite and non-zero")

    def apply(self, x, y):
        return (np.asarray(x) - self.x_offset) / self.scale, (np.asarray(y) - self.y_offset) / self.scale

    def invert(self, x, y):
        return np.asarray(x) * self.scale + self.x_offset, np.asarray(y) * self.scale + self.y_offset

    def as_dict(self) -> dict:
        return {"x_offset": self.x_offset, "y_offset": self.y_offset, "scale": self.scale}


def normalize(trajs, scale: float = 1.0) -> tuple[list[Trajectory], Normalization]:
    """Subtract the pooled mean position of all samples (and divide by ``scale``)."""
    if not trajs:
        raise InputError("nothing to normalize")
    xs = np.concatenate([tr.x for tr in trajs])
    ys = np.concatenate([tr.y for tr in trajs])
    norm = Normalization(float(np.mean(xs)), float(np.mean(ys)), float(scale))
    out = []
    for tr in trajs:
        x, y = norm.apply(tr.x, tr.y)
        out.append(Trajectory(tr.agent_id, tr.t, x, y))
    return out, norm


def export_grid(grid: InfluenceGrid, path) -> None:
    xs, ys = grid.xs, grid.ys
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(GRID_HEADER) + "\n")
        for k, t in enumerate(grid.times):
            ts = _fmt(t)
            for iy, y in enumerate(ys):
                ys_ = _fmt(y)
                for ix, x in enumerate(xs):
                    fh.write(",".join((ts, _fmt(x), ys_, _fmt(grid.lap_mean[k, iy, ix]),
                                       _fmt(grid.lap_var[k, iy, ix]),
                                       _fmt(grid.signed_kl[k, iy, ix]))) + "\n")


def load_grid(path) -> InfluenceGrid:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: malformed grid file ({exc})") from None
    with open(path, encoding="utf-8") as fh:
        header = tuple(fh.readline().strip().split(","))
    if header != GRID_HEADER or data.shape[1] != len(GRID_HEADER):
        raise InputError(f"{path}: expected header {','.join(GRID_HEADER)}")
    times = np.unique(data[:, 0])
    xs = np.unique(data[:, 1])
    ys = np.unique(data[:, 2])
    T, ny, nx = len(times), len(ys), len(xs)
    if data.shape[0] != T * ny * nx:
        raise InputError(f"{path}: {data.shape[0]} rows do not form a {T}x{ny}x{nx} lattice")
    cube = data.reshape(T, ny, nx, len(GRID_HEADER))
    return InfluenceGrid((float(xs[0]), float(xs[-1])), (float(ys[0]), float(ys[-1])), nx, ny,
                         cube[:, 0, 0, 0].copy(), cube[..., 3].copy(), cube[..., 4].copy(),
                         cube[..., 5].copy())


def export_map(values: np.ndarray, xs, ys, path, name: str = "mean_signed_kl") -> None:
    """Write a single 2-D map as ``x,y,<name>`` rows, y-major."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"x,y,{name}\n")
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(values[iy, ix])}\n")


def diverging_rgb(values: np.ndarray) -> np.ndarray:
    """Blue-white-red colours, symmetric about 0 with limits +/- max|value|.

    Negative values (attractors) go to the blue end, positive to the red
    end, zero to white.
    """
    values = np.asarray(values, dtype=float)
    vmax = float(np.max(np.abs(values))) if values.size else 0.0
    s = values / vmax if vmax > 0 else np.zeros_like(values)
    neg = np.clip(1.0 + s, 0.0, 1.0)
    pos = np.clip(1.0 - s, 0.0, 1.0)
    r = np.where(s < 0, neg, 1.0)
    g = np.where(s < 0, neg, pos)
    b = np.where(s < 0, 1.0, pos)
    return np.rint(np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)


def render_heatmap(values: np.ndarray, path, cell: int = 8) -> None:
    """Write a binary PPM; row 0 of ``values`` (lowest y) ends up at the bottom."""
    rgb = diverging_rgb(values)[::-1]
    if cell > 1:
        rgb = np.repeat(np.repeat(rgb, cell, axis=0), cell, axis=1)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary PPM written by :func:`render_heatmap` into (h, w, 3) uint8."""
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P6":
        raise InputError(f"{path}: not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
