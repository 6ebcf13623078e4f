"""Command line: ``odometry``, ``evaluate`` and ``simulate`` subcommands.

Exit codes: 0 success, 1 malformed or unusable input, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .evaluation import SEGMENT_LENGTHS, LengthMismatch, TooShort, endpoint_error, evaluate_kitti
from .geometry import RigidTransform
from .registration import STAGES, Odometer
from .scan_io import (
    AXIS_REMAPS,
    ConfigError,
    EmptySweep,
    MalformedFile,
    RunConfig,
    dump_config,
    list_sweep_files,
    load_config,
    read_kitti_trajectory,
    read_sweep,
    write_kitti_sweep,
    write_kitti_trajectory,
)

log = logging.getLogger("imls_odometry")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2

# KITTI camera axes (x right, y down, z forward) -> vehicle axes (X right, Y forward, Z up)
CAMERA_TO_VEHICLE = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])


# ---------------------------------------------------------------- odometry

def _manifest_line(res, name: str) -> str:
    m = res.match
    parts = [
        f"sweep={res.index}",
        f"file={name}",
        f"points={res.num_points}",
        f"kept={res.num_kept}",
        f"samples={res.num_samples}",
        f"iterations={m.iterations_run}",
        f"constraints={m.final_constraints}",
        f"residual={m.mean_abs_residual:.6f}",
        f"fallback={int(m.fallback)}",
    ]
    parts += [f"{stage}_ms={res.timings[stage]:.3f}" for stage in STAGES]
    return " ".join(parts)


def run_odometry(input_dir, fmt: str, config: RunConfig, output_traj, output_map=None, manifest=None,
                 out=None) -> int:
    out = out or sys.stdout
    files = list_sweep_files(input_dir, fmt)
    if not files:
        print(f"error: no .{'bin' if fmt == 'kitti' else 'ply'} sweeps in {input_dir}", file=sys.stderr)
        return EXIT_INPUT
    odo = Odometer(config)
    lines = []
    started = time.perf_counter()
    for k, path in enumerate(files):
        try:
            sweep = read_sweep(path, k, fmt)
        except (MalformedFile, EmptySweep, OSError) as exc:
            print(f"error: {path.name}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        res = odo.process(sweep)
        lines.append(_manifest_line(res, path.name))
        log.info(lines[-1])
    wall = time.perf_counter() - started

    write_kitti_trajectory(odo.poses, output_traj)
    if output_map:
        odo.model.write_ply(output_map)
    if manifest:
        header = [
            f"# input {Path(input_dir).resolve()} format={fmt}",
            f"# trajectory {Path(output_traj).resolve()}",
        ]
        if output_map:
            header.append(f"# map {Path(output_map).resolve()}")
        header += ["# config " + line for line in dump_config(config).splitlines()]
        Path(manifest).write_text("\n".join(header + lines) + "\n")

    n = len(odo.results)
    print(f"processed {n} sweeps in {wall:.2f} s ({1e3 * wall / n:.1f} ms/sweep)", file=out)
    for stage in STAGES:
        ms = np.array([r.timings[stage] for r in odo.results])
        print(f"  {stage:<9s} mean {ms.mean():8.2f} ms  max {ms.max():8.2f} ms", file=out)
    fallbacks = sum(r.match.fallback for r in odo.results)
    if fallbacks:
        print(f"  {fallbacks} sweep(s) fell back to the predicted pose", file=out)
    return EXIT_OK


def _cmd_odometry(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not Path(args.input).is_dir():
        print(f"error: {args.input} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    return run_odometry(args.input, args.format, cfg, args.output_traj, args.output_map, args.manifest)


# ---------------------------------------------------------------- evaluate

def to_vehicle_axes(poses, frame: str) -> list[RigidTransform]:
    if frame == "vehicle":
        return list(poses)
    c = RigidTransform(CAMERA_TO_VEHICLE, np.zeros(3))
    ci = c.inverse()
    return [c @ p @ ci for p in poses]


def _cmd_evaluate(args) -> int:
    try:
        est = read_kitti_trajectory(args.est)
        gt = to_vehicle_axes(read_kitti_trajectory(args.gt), args.gt_frame)
    except (MalformedFile, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    lengths = tuple(args.lengths) if args.lengths else SEGMENT_LENGTHS
    try:
        report = evaluate_kitti(est, gt, lengths)
        text = report.format()
        status = EXIT_OK
    except LengthMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TooShort as exc:
        report = None
        err, pct = endpoint_error(est, gt)
        text = f"endpoint_error_m {err:.6f}\nendpoint_error_percent {pct:.6f}\n"
        print(f"error: {exc}; only the endpoint error is reported", file=sys.stderr)
        status = EXIT_INPUT
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
    if args.figures:
        from .plotting import write_report_figures

        for p in write_report_figures(est, gt, report, args.figures):
            print(f"wrote {p}", file=sys.stderr)
    return status


# ---------------------------------------------------------------- simulate

def write_simulation(scene, out_dir, remap: str = "kitti") -> list[Path]:
    """Write every sweep as a KITTI .bin (sensor axes per ``remap``) and ``truth.txt``."""
    from .simulation import simulate_run

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    to_sensor = AXIS_REMAPS[remap].T
    sims, truth = simulate_run(scene)
    paths = []
    for sim in sims:
        path = out / f"{sim.sweep.index:06d}.bin"
        write_kitti_sweep(sim.sweep.points @ to_sensor.T, path)
        paths.append(path)
    write_kitti_trajectory(truth, out / "truth.txt")
    return paths


def _preset(name: str, seed: int):
    from . import scenes

    if name == "loop":
        return scenes.square_loop_scene(seed)
    if name == "corridor":
        return scenes.corridor_scene(seed)
    if name == "static":
        return scenes.static_scene(seed)
    raise ValueError(f"unknown preset {name!r}")


def _cmd_simulate(args) -> int:
    from .simulation import dump_scene, load_scene

    try:
        scene = load_scene(args.scene) if args.scene else _preset(args.preset, args.seed)
    except (OSError, ValueError) as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = write_simulation(scene, args.out)
    Path(args.out, "scene.txt").write_text(dump_scene(scene))
    print(f"wrote {len(paths)} sweeps and truth.txt to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imls-odometry", description="IMLS scan-to-model LiDAR odometry")
    parser.add_argument("-v", "--verbose", action="store_true", help="log one line per sweep")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("odometry", help="estimate a trajectory from a directory of sweeps")
    p.add_argument("--input", required=True, help="directory of sweeps, filename order = time order")
    p.add_argument("--format", choices=("kitti", "ply"), default="kitti")
    p.add_argument("--config", help="key = value config file (defaults when omitted)")
    p.add_argument("--output-traj", required=True, help="KITTI pose file to write")
    p.add_argument("--output-map", help="PLY file for the final model map")
    p.add_argument("--manifest", help="text manifest, one line per sweep")
    p.set_defaults(func=_cmd_odometry)

    p = sub.add_parser("evaluate", help="KITTI-style drift and endpoint error")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--gt-frame", choices=("vehicle", "camera"), default="vehicle",
                   help="axes of the truth file; 'camera' for KITTI ground truth")
    p.add_argument("--lengths", type=float, nargs="+", help="segment lengths in meters")
    p.add_argument("--report", help="also write the text report here")
    p.add_argument("--figures", help="directory for trajectory/drift PNG figures")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate", help="render a synthetic scene to KITTI sweeps plus truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scene", help="plain-text scene file")
    src.add_argument("--preset", choices=("loop", "corridor", "static"))
    p.add_argument("--seed", type=int, default=0, help="seed for --preset scenes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
