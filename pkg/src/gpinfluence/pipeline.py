"""End-to-end orchestration: trajectories -> accelerations -> field -> influence maps."""
from __future__ import annotations

import contextlib
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io
from .errors import InputError, NumericalError
from .field import FieldModel, fit_field, pool_samples
from .gp import OptimizerConfig
from .gp import fit as gp_fit
from .influence import GridSpec, InfluenceGrid, build_grid, mean_over_time
from .kernel import KernelHyperparams
from .synthetic import SimConfig, UtilityParams, simulate
from .trajectory import fit_trajectory, infer_accelerations, trim_endpoints

log = logging.getLogger(__name__)

MAX_DEFAULT_FRAMES = 200


@dataclass
class PipelineConfig:
    """Everything one run needs.

    ``trajectories`` is a CSV path; when it is None the synthetic world
    (``utility``, ``sim``) is simulated instead. Field-layer hyperparameters
    default to spatial and temporal length scales of 1 with the output scale
    taken from the acceleration targets and noise ``field_noise_fraction``
    times that.
    """

    output_dir: Path = Path("run")
    trajectories: Path | None = None
    utility: UtilityParams = field(default_factory=UtilityParams)
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    traj_init: KernelHyperparams | None = None
    traj_optimize: bool = True
    traj_restarts: int = 3
    field_length_scales: tuple[float, float, float] = (1.0, 1.0, 1.0)
    field_output_scale: float | None = None
    field_noise_fraction: float = 0.2
    field_optimize: bool = False
    field_restarts: int = 2
    trim: int = 2
    normalize_scale: float = 1.0
    x_bounds: tuple[float, float] | None = None
    y_bounds: tuple[float, float] | None = None
    nx: int = 40
    ny: int = 40
    times: tuple[float, ...] | None = None
    n_frames: int | None = None
    workers: int | None = None
    render_frames: int = 4

    def validate(self):
        if self.trajectories is not None and not Path(self.trajectories).is_file():
            raise InputError(f"trajectory file {self.trajectories} does not exist")
        if self.nx < 2 or self.ny < 2:
            raise InputError("grid needs nx, ny >= 2")
        if self.trim < 0:
            raise InputError("trim must be non-negative")
        if self.field_noise_fraction < 0:
            raise InputError("field_noise_fraction must be non-negative")
        if len(self.field_length_scales) != 3 or min(self.field_length_scales) <= 0:
            raise InputError("field_length_scales needs three positive values")


@dataclass
class PipelineResult:
    grid: InfluenceGrid
    mean_map: np.ndarray
    field: FieldModel
    normalization: io.Normalization
    trajectories: list
    manifest: dict
    outputs: dict


@contextlib.contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    log.info("stage %s", name)
    try:
        yield
    except (InputError, NumericalError, OSError) as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    timings[name] = round(time.perf_counter() - start, 3)


def field_init(targets: np.ndarray, cfg: PipelineConfig) -> KernelHyperparams:
    scale = cfg.field_output_scale
    if scale is None:
        scale = float(np.std(targets)) or 1.0
    return KernelHyperparams(scale, cfg.field_length_scales, cfg.field_noise_fraction * scale)


def default_times(trajs, n_frames: int | None) -> tuple[float, ...]:
    pooled = np.unique(np.concatenate([tr.t for tr in trajs]))
    if n_frames is None and pooled.size <= MAX_DEFAULT_FRAMES:
        return tuple(pooled)
    return tuple(np.linspace(pooled[0], pooled[-1], n_frames or MAX_DEFAULT_FRAMES))


def default_bounds(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = 0.1 * (hi - lo) if hi > lo else 1.0
    return lo - pad, hi + pad


def grid_spec(cfg: PipelineConfig, trajs) -> GridSpec:
    xs = np.concatenate([tr.x for tr in trajs])
    ys = np.concatenate([tr.y for tr in trajs])
    times = cfg.times if cfg.times is not None else default_times(trajs, cfg.n_frames)
    return GridSpec(cfg.x_bounds or default_bounds(xs), cfg.y_bounds or default_bounds(ys),
                    cfg.nx, cfg.ny, tuple(times))


def build_world_grid(model: FieldModel, spec: GridSpec, norm: io.Normalization,
                     workers=None) -> InfluenceGrid:
    """Evaluate on a grid given in original coordinates; report original coordinates."""
    inner = build_grid(model, spec.shifted(norm.x_offset, norm.y_offset, norm.scale), workers)
    return replace(inner, x_bounds=spec.x_bounds, y_bounds=spec.y_bounds)


def save_field_model(model: FieldModel, norm: io.Normalization, path) -> None:
    hx, hy = model.gp_vx.hyperparams, model.gp_vy.hyperparams
    np.savez(
        path,
        inputs=model.gp_vx.inputs,
        targets_x=model.gp_vx.targets,
        targets_y=model.gp_vy.targets,
        hp_x=np.array([hx.output_scale, *hx.length_scales, hx.noise_std]),
        hp_y=np.array([hy.output_scale, *hy.length_scales, hy.noise_std]),
        normalization=np.array([norm.x_offset, norm.y_offset, norm.scale]),
    )


def load_field_model(path) -> tuple[FieldModel, io.Normalization]:
    try:
        with np.load(path) as data:
            X = data["inputs"]
            hx, hy = data["hp_x"], data["hp_y"]
            models = [
                gp_fit(X, data[key], KernelHyperparams(h[0], tuple(h[1:-1]), h[-1]))
                for key, h in (("targets_x", hx), ("targets_y", hy))
            ]
            norm = io.Normalization(*map(float, data["normalization"]))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: not a field model file ({exc})") from None
    return FieldModel(*models), norm


def write_maps(grid: InfluenceGrid, mean_map: np.ndarray, out: Path, render_frames: int) -> dict:
    outputs = {}
    io.export_grid(grid, out / "grid.csv")
    outputs["grid"] = "grid.csv"
    io.export_map(mean_map, grid.xs, grid.ys, out / "mean_map.csv")
    outputs["mean_map"] = "mean_map.csv"
    io.render_heatmap(mean_map, out / "mean_signed_kl.ppm")
    outputs["mean_heatmap"] = "mean_signed_kl.ppm"
    if render_frames > 0:
        picks = np.unique(np.linspace(0, len(grid.times) - 1, min(render_frames, len(grid.times))).astype(int))
        for k in picks:
            for name, cube in (("laplacian", grid.lap_mean), ("signed_kl", grid.signed_kl)):
                fname = f"{name}_frame{k:04d}.ppm"
                io.render_heatmap(cube[k], out / fname)
                outputs.setdefault("frames", []).append(fname)
    return outputs


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run every stage and write grid, maps, images, field model and manifest.

    On failure, files created by this run are removed and the error is
    re-raised with the failing stage in its message.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    pre_existing = set(out.iterdir()) if out.is_dir() else set()
    timings: dict[str, float] = {}
    try:
        return _run(cfg, out, timings)
    except BaseException:
        if out.is_dir():
            for p in out.iterdir():
                if p not in pre_existing and p.is_file():
                    p.unlink()
        raise


def _run(cfg: PipelineConfig, out: Path, timings: dict) -> PipelineResult:
    with _stage("load", timings):
        out.mkdir(parents=True, exist_ok=True)
        if cfg.trajectories is not None:
            raw = io.load_trajectories(cfg.trajectories)
            source = {"kind": "file", "path": str(cfg.trajectories)}
        else:
            sim = replace(cfg.sim, seed=cfg.seed)
            raw = simulate(cfg.utility, sim)
            source = {"kind": "synthetic", "utility": _plain(cfg.utility), "sim": _plain(sim)}
        if not raw:
            raise InputError("no usable trajectories")
        io.save_trajectories(raw, out / "trajectories.csv")

    with _stage("normalize", timings):
        trajs, norm = io.normalize(raw, cfg.normalize_scale)

    opt = OptimizerConfig(restarts=cfg.traj_restarts, seed=cfg.seed)
    traj_hp = {}
    with _stage("trajectory", timings):
        samples = []
        for tr in trajs:
            model = fit_trajectory(tr, cfg.traj_init, cfg.traj_optimize, opt)
            traj_hp[tr.agent_id] = {"x": model.gp_x.hyperparams.as_dict(),
                                    "y": model.gp_y.hyperparams.as_dict()}
            samples.extend(trim_endpoints(infer_accelerations(model), cfg.trim))

    with _stage("field", timings):
        if len(samples) < 4:
            raise InputError(f"only {len(samples)} acceleration samples after trimming")
        _, ax, ay = pool_samples(samples)
        field_opt = OptimizerConfig(restarts=cfg.field_restarts, seed=cfg.seed)
        fmodel = fit_field(samples, field_init(ax, cfg), field_init(ay, cfg),
                           cfg.field_optimize, field_opt)
        save_field_model(fmodel, norm, out / "field_model.npz")

    with _stage("grid", timings):
        spec = grid_spec(cfg, raw)
        grid = build_world_grid(fmodel, spec, norm, cfg.workers)
        mean_map = mean_over_time(grid)

    with _stage("write", timings):
        outputs = write_maps(grid, mean_map, out, cfg.render_frames)
        outputs["trajectories"] = "trajectories.csv"
        outputs["field_model"] = "field_model.npz"
        outputs["manifest"] = "manifest.json"

    manifest = {
        "source": source,
        "agents": len(raw),
        "samples_per_agent": {tr.agent_id: len(tr) for tr in raw},
        "seed": cfg.seed,
        "normalization": norm.as_dict(),
        "trajectory_hyperparams": traj_hp,
        "field_hyperparams": {"x": fmodel.gp_vx.hyperparams.as_dict(),
                              "y": fmodel.gp_vy.hyperparams.as_dict()},
        "field_training_points": int(fmodel.inputs.shape[0]),
        "grid": {"x_bounds": list(spec.x_bounds), "y_bounds": list(spec.y_bounds),
                 "nx": spec.nx, "ny": spec.ny, "frames": len(spec.times)},
        "prior_laplacian_variance": grid.prior_var,
        "outputs": outputs,
        "timings": timings,
    }
    with _stage("manifest", {}):
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
    return PipelineResult(grid, mean_map, fmodel, norm, raw, manifest, outputs)


def _plain(obj) -> dict:
    from dataclasses import asdict
    d = asdict(obj)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
