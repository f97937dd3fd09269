"""
Command-line entry point.

Subcommands:
  simulate  scene file -> scans, poses and ground truth
  map       scans + poses -> map file and stage timings
  eval      map + ground truth -> evaluation report
  render    map -> one pixmap per layer
  bench     repeated `map` runs -> stage timing statistics

"""

#
# _|_|_|_|_|  _|_|_|    _|_|_|  _|_|_|
#     _|      _|    _|    _|    _|    _|
#     _|      _|_|_|      _|    _|_|_|
#     _|      _|    _|    _|    _|
#     _|      _|    _|  _|_|_|  _|
#
#

from __future__ import annotations
from typing import Optional
from typing import Sequence
import argparse
import os
import sys
import pandas as pd
from . import dataset_utils
from .config import ABLATIONS
from .config import PipelineConfig
from .config import apply_ablation
from .config import load_config
from .defaults import PRESETS
from .defaults import load_preset
from .fusion import FusionSettings
from .fusion import snapshot
from .graphics.render import RENDERABLE
from .graphics.render import render_layer
from .map_io import export_map
from .map_io import import_map
from .pipeline import MapperSettings
from .pipeline import REFERENCE_BUDGET_MS
from .pipeline import TerrainMapper
from .pipeline import flat_update_cost
from .pipeline import timing_summary
from .postprocessing.evaluation import evaluate
from .postprocessing.evaluation import write_report
from .sim.ground_truth import ground_truth
from .sim.ground_truth import load_ground_truth
from .sim.ground_truth import save_ground_truth
from .sim.ground_truth import scene_grid
from .sim.raycast import simulate_sequence
from .sim.scene import load_scene


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """
    Configuration from `--config` or `--preset`, with the command-line
    overrides and ablations applied.

    """
    if args.config:
        config = load_config(args.config)
    elif args.preset:
        config = load_preset(args.preset, dynamic=args.dynamic)
    else:
        config = PipelineConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.threads is not None:
        changes["threads"] = args.threads
    if changes:
        config = config.updated(**changes)
    for name in args.ablate or []:
        config = apply_ablation(config, name)
    return config


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", default=None, help="Configuration file (JSON)."
    )
    parser.add_argument(
        "--preset",
        choices=list(PRESETS),
        default=None,
        help="Parameter preset.",
    )
    parser.add_argument(
        "--dynamic",
        action="store_true",
        help="Use the dynamic-scene gate threshold of the preset.",
    )
    parser.add_argument("--seed", type=int, default=None, help="Noise seed.")
    parser.add_argument(
        "--threads", type=int, default=None, help="Worker threads per stage."
    )
    parser.add_argument(
        "--ablate",
        action="append",
        choices=list(ABLATIONS),
        default=None,
        help="Switch off one pipeline feature (repeatable).",
    )
    parser.add_argument("--log-file", default=None, help="Write a log file.")


def _add_input_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scans", required=True, help="Scan file or directory of scan files."
    )
    parser.add_argument("--poses", required=True, help="Pose file.")
    parser.add_argument(
        "--format",
        choices=list(dataset_utils.SCAN_FORMATS),
        default="bin-xyzi",
        help="Scan file format.",
    )


def build_parser() -> argparse.ArgumentParser:
    """
    The argument parser of every subcommand.

    """
    parser = argparse.ArgumentParser(
        prog="tripmap", description="Terrain traversability mapping."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Simulate scans and ground truth.")
    sim.add_argument("--scene", required=True, help="Scene file (JSON).")
    sim.add_argument("--out", required=True, help="Output directory.")
    sim.add_argument(
        "--format",
        choices=list(dataset_utils.SCAN_FORMATS),
        default="bin-xyzi",
        help="Scan file format.",
    )
    _add_config_args(sim)

    mapper = sub.add_parser("map", help="Build a map from scans and poses.")
    _add_input_args(mapper)
    mapper.add_argument("--out", required=True, help="Map file to write.")
    _add_config_args(mapper)

    evl = sub.add_parser("eval", help="Score a map against ground truth.")
    evl.add_argument("--map", required=True, help="Map file.")
    evl.add_argument("--gt", required=True, help="Ground-truth file.")
    evl.add_argument("--out", required=True, help="Report path prefix.")
    _add_config_args(evl)

    rnd = sub.add_parser("render", help="Render map layers as pixmaps.")
    rnd.add_argument("--map", required=True, help="Map file.")
    rnd.add_argument("--out", required=True, help="Output directory.")
    rnd.add_argument(
        "--layer",
        action="append",
        choices=list(RENDERABLE),
        default=None,
        help="Layer to render (repeatable, default all).",
    )

    bench = sub.add_parser("bench", help="Time repeated mapping runs.")
    _add_input_args(bench)
    bench.add_argument("--out", required=True, help="Timing table (CSV).")
    bench.add_argument("--repeat", type=int, default=3, help="Number of runs.")
    _add_config_args(bench)
    return parser


def cmd_simulate(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    scene = load_scene(args.scene)
    intr = scene.intrinsics
    if intr is None:
        intr = config.intrinsics
    scans, poses = simulate_sequence(
        scene, intr, config.noise_sigma, config.seed, config.threads
    )
    os.makedirs(args.out, exist_ok=True)
    dataset_utils.write_scan_sequence(
        scans, os.path.join(args.out, "scans"), args.format
    )
    dataset_utils.write_poses(poses, os.path.join(args.out, "poses.txt"))
    truth = ground_truth(
        scene,
        scene_grid(scene, config.resolution),
        config.tau_h,
        config.adjacency,
    )
    save_ground_truth(truth, os.path.join(args.out, "ground_truth.npz"))
    print(f"Simulated {len(scans)} scans into {args.out}")


def _run_mapper(
    args: argparse.Namespace, config: PipelineConfig
) -> TerrainMapper:
    mapper = TerrainMapper(
        config, MapperSettings(log_file=args.log_file, silent=False)
    )
    scans = dataset_utils.ingest_scan_sequence(args.scans, args.format)
    poses = dataset_utils.ingest_poses(args.poses)
    total = len(dataset_utils.scan_files(args.scans, args.format))
    mapper.run(scans, poses, total=total)
    return mapper


def cmd_map(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    mapper = _run_mapper(args, config)
    export_map(mapper.map, args.out)
    mapper.timing_table().to_csv(f"{args.out}.timings.csv")
    print(f"Wrote {len(mapper.map)} cells to {args.out}")


def cmd_eval(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    static_map = import_map(args.map, FusionSettings.from_config(config))
    truth = load_ground_truth(args.gt)
    report = evaluate(
        snapshot(static_map, truth.spec),
        truth,
        config.decision_tau,
        config.adjacency,
    )
    write_report(report, f"{args.out}.txt", f"{args.out}.kv")
    print(report.to_text(), end="")


def cmd_render(args: argparse.Namespace) -> None:
    static_map = import_map(args.map)
    snap = snapshot(static_map)
    os.makedirs(args.out, exist_ok=True)
    for layer in args.layer or list(RENDERABLE):
        render_layer(snap, layer, os.path.join(args.out, f"{layer}.ppm"))
    n_y, n_x = snap.spec.shape
    print(f"Rendered {n_x} x {n_y} cells into {args.out}")


def cmd_bench(args: argparse.Namespace) -> None:
    if args.repeat < 1:
        raise ValueError("--repeat must be at least 1")
    config = resolve_config(args)
    tables = []
    for run in range(args.repeat):
        table = _run_mapper(args, config).timing_table().reset_index()
        table.insert(0, "run", run)
        tables.append(table)
    timings = pd.concat(tables, ignore_index=True)
    timings.to_csv(args.out, index=False)
    summary = timing_summary(timings)
    print(summary.to_string(float_format=lambda val: f"{val:.3f}"))
    budget = REFERENCE_BUDGET_MS.get(args.preset or "")
    if budget is not None:
        mean_total = summary.loc["total", "mean_ms"]
        print(
            f"Mean total {mean_total:.3f} ms, "
            f"reference budget {budget:.3f} ms"
        )
    flat = flat_update_cost(tables[0])
    if flat is not None:
        print(f"Flat update cost: {'yes' if flat else 'no'}")


COMMANDS = {
    "simulate": cmd_simulate,
    "map": cmd_map,
    "eval": cmd_eval,
    "render": cmd_render,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one subcommand. Returns the process exit status.

    """
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"tripmap {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
