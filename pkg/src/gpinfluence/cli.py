"""Command-line interface.

Subcommands: ``simulate``, ``infer``, ``grid``, ``oracle``, ``check``. Every
option can also come from an INI file (``--config``) in a section named
after the subcommand, with ``[DEFAULT]`` shared; command-line flags win.
Exit codes: 0 success, 1 input error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, checks, io
from .errors import InputError, NumericalError
from .influence import GridSpec, mean_over_time
from .pipeline import PipelineConfig, build_world_grid, load_field_model, run_pipeline, write_maps
from .synthetic import DEFAULT_STARTS, SimConfig, UtilityParams, simulate, utility, utility_laplacian

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("gpinfluence")


# -- value parsers shared by flags and config entries -------------------------

def _floats(text: str, count: int | None = None) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise argparse.ArgumentTypeError(f"expected {count} numbers, got {text!r}")
    return values


def pair(text):
    return _floats(text, 2)


def triple(text):
    return _floats(text, 3)


def points(text) -> tuple[tuple[float, float], ...]:
    """``"x,y;x,y;..."`` -> tuple of points."""
    out = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            out.append(_floats(chunk, 2))
    if not out:
        raise argparse.ArgumentTypeError("expected at least one point")
    return tuple(out)


def time_range(text) -> tuple[float, ...]:
    """``"start,stop,count"`` -> evenly spaced times."""
    start, stop, count = _floats(text, 3)
    if count < 1 or count != int(count):
        raise argparse.ArgumentTypeError("time count must be a positive integer")
    return tuple(np.linspace(start, stop, int(count)))


def boolean(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in configparser.RawConfigParser.BOOLEAN_STATES:
        return configparser.RawConfigParser.BOOLEAN_STATES[value]
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# -- option registry -----------------------------------------------------------

class _Options:
    """Remembers each option's default and parser so config values can be merged."""

    def __init__(self, parser: argparse.ArgumentParser):
        self.parser = parser
        self.specs: dict[str, tuple] = {}

    def add(self, flag: str, type=str, default=None, help: str = ""):
        dest = flag.lstrip("-").replace("-", "_")
        if type is bool:
            self.parser.add_argument(flag, dest=dest, action=argparse.BooleanOptionalAction,
                                     default=None, help=f"{help} (default {default})")
            self.specs[dest] = (boolean, default)
        else:
            self.parser.add_argument(flag, dest=dest, type=type, default=None,
                                     help=f"{help} (default {default})" if default is not None else help)
            self.specs[dest] = (type, default)

    def resolve(self, args: argparse.Namespace, section: dict) -> dict:
        unknown = set(section) - set(self.specs) - {"config"}
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        out = {}
        for dest, (conv, default) in self.specs.items():
            value = getattr(args, dest)
            if value is None and dest in section:
                try:
                    value = conv(section[dest])
                except argparse.ArgumentTypeError as exc:
                    raise InputError(f"config key {dest}: {exc}") from None
            out[dest] = default if value is None else value
        return out


def _config_section(path, command: str) -> dict:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise InputError(f"{path}: {exc}") from None
    if parser.has_section(command):
        return dict(parser.items(command))
    return dict(parser.defaults())


def _world_options(opts: _Options):
    opts.add("--mu1", pair, (-1.5, 0.0), "first attractor mean x,y")
    opts.add("--mu2", pair, (1.5, 0.0), "second attractor mean x,y")
    opts.add("--a", float, 2.1, "first component variance offset")
    opts.add("--b", float, 2.1, "second component variance offset")
    opts.add("--eta", float, 0.05, "update increment (also the sample spacing in time)")
    opts.add("--steps", int, 200, "samples per agent")
    opts.add("--noise-std", float, 0.01, "std of per-step acceleration noise")
    opts.add("--starts", points, DEFAULT_STARTS, "agent start positions 'x,y;x,y;...'")


def _grid_options(opts: _Options, bounds_default):
    opts.add("--x-bounds", pair, bounds_default, "grid x range lo,hi")
    opts.add("--y-bounds", pair, bounds_default, "grid y range lo,hi")
    opts.add("--nx", int, 40, "grid columns")
    opts.add("--ny", int, 40, "grid rows")
    opts.add("--times", time_range, None, "grid times as start,stop,count")
    opts.add("--workers", int, None, "grid worker threads (env GPINFLUENCE_WORKERS otherwise)")
    opts.add("--render-frames", int, 4, "number of per-frame heatmaps to write")


def _world(v: dict) -> tuple[UtilityParams, SimConfig]:
    util = UtilityParams(mu1=v["mu1"], mu2=v["mu2"], a=v["a"], b=v["b"])
    sim = SimConfig(eta=v["eta"], noise_std=v["noise_std"], steps=v["steps"],
                    seed=v["seed"], starts=tuple(v["starts"]))
    return util, sim


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, _Options]]:
    parser = argparse.ArgumentParser(
        prog="gpinfluence",
        description="Infer attractor/repeller maps from agent trajectories with layered GPs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, _Options] = {}

    def command(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", type=Path, help="INI file; section named after the subcommand")
        opts = _Options(p)
        registry[name] = opts
        return opts

    o = command("simulate", "simulate agents in the synthetic world and write a trajectory CSV")
    o.add("--output", Path, Path("trajectories.csv"), "trajectory file to write")
    o.add("--seed", int, 0, "random seed")
    _world_options(o)

    o = command("infer", "trajectories -> acceleration field -> influence grid, maps and manifest")
    o.add("--trajectories", Path, None, "trajectory CSV (omit to simulate the synthetic world)")
    o.add("--output-dir", Path, Path("run"), "directory for all outputs")
    o.add("--seed", int, 0, "random seed for simulation and optimizer restarts")
    _world_options(o)
    _grid_options(o, None)
    o.add("--frames", int, None, "number of evenly spaced grid times (default: sample times)")
    o.add("--trim", int, 2, "acceleration samples dropped at each trajectory end")
    o.add("--normalize-scale", float, 1.0, "divide centred coordinates by this")
    o.add("--traj-optimize", bool, True, "optimize trajectory-layer hyperparameters")
    o.add("--traj-restarts", int, 3, "optimizer starts per trajectory axis")
    o.add("--field-length-scales", triple, (1.0, 1.0, 1.0), "field length scales x,y,t")
    o.add("--field-output-scale", float, None, "field output scale (default: target std)")
    o.add("--field-noise-fraction", float, 0.2, "field noise std as a fraction of the output scale")
    o.add("--field-optimize", bool, False, "optimize field-layer hyperparameters")
    o.add("--field-restarts", int, 2, "optimizer starts per field axis")

    o = command("grid", "re-evaluate a saved field model on new bounds or times")
    o.add("--model", Path, Path("run/field_model.npz"), "field model written by infer")
    o.add("--output-dir", Path, Path("regrid"), "directory for outputs")
    _grid_options(o, (-4.0, 4.0))

    o = command("oracle", "true utility and Laplacian of the synthetic world on a grid")
    o.add("--output-dir", Path, Path("oracle"), "directory for outputs")
    o.add("--seed", int, 0, "unused; accepted for config sharing")
    _world_options(o)
    _grid_options(o, (-4.0, 4.0))

    o = command("check", "run the finite-difference and Monte-Carlo self-checks")
    o.add("--seed", int, 0, "random seed")
    o.add("--quick", bool, False, "smaller sample counts")
    return parser, registry


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(v: dict) -> int:
    util, sim = _world(v)
    trajs = simulate(util, sim)
    out = Path(v["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    io.save_trajectories(trajs, out)
    print(f"wrote {len(trajs)} agents x {sim.steps} samples to {out}")
    return EXIT_OK


def cmd_infer(v: dict) -> int:
    util, sim = _world(v)
    cfg = PipelineConfig(
        output_dir=v["output_dir"],
        trajectories=v["trajectories"],
        utility=util,
        sim=sim,
        seed=v["seed"],
        traj_optimize=v["traj_optimize"],
        traj_restarts=v["traj_restarts"],
        field_length_scales=tuple(v["field_length_scales"]),
        field_output_scale=v["field_output_scale"],
        field_noise_fraction=v["field_noise_fraction"],
        field_optimize=v["field_optimize"],
        field_restarts=v["field_restarts"],
        trim=v["trim"],
        normalize_scale=v["normalize_scale"],
        x_bounds=v["x_bounds"] or ((-4.0, 4.0) if v["trajectories"] is None else None),
        y_bounds=v["y_bounds"] or ((-4.0, 4.0) if v["trajectories"] is None else None),
        nx=v["nx"],
        ny=v["ny"],
        times=v["times"],
        n_frames=v["frames"],
        workers=v["workers"],
        render_frames=v["render_frames"],
    )
    result = run_pipeline(cfg)
    m = result.manifest
    print(f"{m['agents']} agents, {m['field_training_points']} field points, "
          f"{m['grid']['frames']} frames -> {cfg.output_dir}")
    return EXIT_OK


def _grid_spec(v: dict, default_times) -> GridSpec:
    times = v["times"] if v["times"] is not None else default_times
    return GridSpec(v["x_bounds"], v["y_bounds"], v["nx"], v["ny"], tuple(times))


def cmd_grid(v: dict) -> int:
    model, norm = load_field_model(v["model"])
    t = model.inputs[:, 2]
    spec = _grid_spec(v, np.unique(t) if np.unique(t).size <= 200 else np.linspace(t.min(), t.max(), 200))
    grid = build_world_grid(model, spec, norm, v["workers"])
    out = Path(v["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    outputs = write_maps(grid, mean_over_time(grid), out, v["render_frames"])
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump({"model": str(v["model"]), "normalization": norm.as_dict(),
                   "grid": {"x_bounds": list(spec.x_bounds), "y_bounds": list(spec.y_bounds),
                            "nx": spec.nx, "ny": spec.ny, "frames": len(spec.times)},
                   "outputs": outputs}, fh, indent=2)
    print(f"{len(spec.times)} frames -> {out}")
    return EXIT_OK


def cmd_oracle(v: dict) -> int:
    util, sim = _world(v)
    spec = _grid_spec(v, np.arange(sim.steps) * sim.eta)
    gx, gy = np.meshgrid(spec.xs, spec.ys)
    pts = np.stack([gx, gy], axis=-1)
    out = Path(v["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    laps = []
    with open(out / "oracle.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("t,x,y,utility,laplacian\n")
        for t in spec.times:
            u = utility(util, pts, t)
            lap = utility_laplacian(util, pts, t)
            laps.append(lap)
            for iy in range(spec.ny):
                for ix in range(spec.nx):
                    fh.write(",".join(format(float(v_), ".17g") for v_ in
                                      (t, spec.xs[ix], spec.ys[iy], u[iy, ix], lap[iy, ix])) + "\n")
    mean_lap = np.mean(laps, axis=0)
    io.export_map(mean_lap, spec.xs, spec.ys, out / "mean_laplacian.csv", "mean_laplacian")
    io.render_heatmap(mean_lap, out / "mean_laplacian.ppm")
    print(f"{len(spec.times)} frames of the true utility -> {out}")
    return EXIT_OK


def cmd_check(v: dict) -> int:
    results = checks.run_all(seed=v["seed"], quick=v["quick"])
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {"simulate": cmd_simulate, "infer": cmd_infer, "grid": cmd_grid,
            "oracle": cmd_oracle, "check": cmd_check}


def main(argv=None) -> int:
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 means numerical failure
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        values = registry[args.command].resolve(args, _config_section(args.config, args.command))
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](values)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
