"""Command-line interface: simulate, calibrate, estimate, evaluate.

The config file is one JSON document with a section per module; any key
absent falls back to its default and unknown keys are rejected by name.
All JSON output is printed with floats at fixed 9-digit precision, so a
given config and seed always produce byte-identical bytes.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 no usable frames,
5 frame failed the visibility checks, 6 dataset has no ground truth.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

from .calibration import OutlierConfig, SanityConfig, calibrate
from .errors import (
    ConfigError,
    DatasetError,
    InvalidDimensions,
    MissingGroundTruth,
    NoUsableFrames,
)
from .evaluation import (
    evaluate_dataset,
    format_report,
    per_frame_csv,
    rotation_error,
    translation_error,
)
from .icp import IcpConfig
from .dataset_io import json_bytes, load_dataset, save_dataset
from .pipeline import (
    PipelineConfig,
    effective_icp_config,
    effective_trim_fraction,
    estimate_frame,
)
from .simulator import HalfspaceCut, default_scenario, generate_dataset

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "jobs": 1,
    "simulator": {
        "noise_sigma_1m": 0.0,
        "noise_exponent": 2.0,
        "dropout": 0.0,
        "frames_per_config": 10,
        "with_background": True,
        # optional {"axis": 0|1|2, "threshold": meters, "remove_above": bool}
        "occlusion": None,
    },
    "labeling": {
        "background_match_radius": 0.005,
        "ee_bbox_inflation": 0.01,
        "keypoint_distance_threshold": 0.01,
    },
    "segmentation": {
        "flip_probability": 0.0,
        "speckle_rate": 0.0,
        "linkage_distance": 0.03,
        "min_cluster_fraction": 0.2,
    },
    "rpt": {
        "rotation_sigma_deg": 0.0,
        "trim_fraction": 0.002,
    },
    "kpm": {
        "sigma_m": 0.0,
        "dropout": 0.0,
        "quality_radius_m": 0.03,
        "snap_radius_m": 0.01,
    },
    "icp": {
        "enabled": True,
        "max_correspondence_distance": 0.02,
        "max_iterations": 50,
        "relative_rmse_epsilon": 1e-6,
        "relative_fitness_epsilon": 1e-6,
        "source_voxel_size": 0.005,
        "source_max_points": 5000,
    },
    "calibration": {
        "min_ee_points": 300,
        "min_bbox_diagonal": 0.04,
        "modified_zscore_threshold": 3.5,
        "mad_zero_epsilon": 1e-6,
        "translation_outlier_mode": "union",
    },
    "evaluation": {
        "add_thresholds": [0.005, 0.01, 0.02, 0.03, 0.05],
        "write_csv": False,
    },
}


def merge_config(defaults: dict, user: dict, path: str = "") -> dict:
    """Overlay user settings on the defaults, rejecting unknown keys."""
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key: {where}")
        base = defaults[key]
        if isinstance(base, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {where} must be a JSON object")
            merged[key] = merge_config(base, value, f"{where}.")
        else:
            merged[key] = value
    return merged


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    text = Path(path).read_text()  # unreadable file is an I/O failure
    try:
        user = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(user, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return merge_config(DEFAULT_CONFIG, user)


def pipeline_config(cfg: dict, args) -> PipelineConfig:
    """Build the estimation settings, with CLI flags taking precedence."""
    icp, seg, cal = cfg["icp"], cfg["segmentation"], cfg["calibration"]
    use_icp = icp["enabled"] and not getattr(args, "no_icp", False)
    try:
        return PipelineConfig(
            seed=cfg["seed"] if args.seed is None else args.seed,
            rotation_sigma_deg=cfg["rpt"]["rotation_sigma_deg"],
            keypoint_sigma_m=cfg["kpm"]["sigma_m"],
            keypoint_dropout=cfg["kpm"]["dropout"],
            keypoint_quality_radius_m=cfg["kpm"]["quality_radius_m"],
            keypoint_snap_radius_m=cfg["kpm"]["snap_radius_m"],
            segmentation_flip_probability=seg["flip_probability"],
            segmentation_speckle_rate=seg["speckle_rate"],
            linkage_distance=seg["linkage_distance"],
            min_cluster_fraction=seg["min_cluster_fraction"],
            rpt_trim_fraction=cfg["rpt"]["trim_fraction"],
            use_icp=use_icp,
            jobs=cfg["jobs"] if args.jobs is None else args.jobs,
            icp=IcpConfig(
                max_correspondence_distance=icp["max_correspondence_distance"],
                max_iterations=icp["max_iterations"],
                relative_rmse_epsilon=icp["relative_rmse_epsilon"],
                relative_fitness_epsilon=icp["relative_fitness_epsilon"],
                source_voxel_size=icp["source_voxel_size"],
                source_max_points=icp["source_max_points"],
            ),
            sanity=SanityConfig(
                min_ee_points=cal["min_ee_points"],
                min_bbox_diagonal=cal["min_bbox_diagonal"],
            ),
            outliers=OutlierConfig(
                modified_zscore_threshold=cal["modified_zscore_threshold"],
                mad_zero_epsilon=cal["mad_zero_epsilon"],
                translation_outlier_mode=cal["translation_outlier_mode"],
            ),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad config value: {e}") from e


def scenario_from_config(cfg: dict, args):
    sim = cfg["simulator"]
    occlusion = None
    if sim["occlusion"] is not None:
        try:
            occlusion = HalfspaceCut.from_dict(sim["occlusion"])
        except (TypeError, KeyError, ValueError) as e:
            raise ConfigError(f"bad simulator.occlusion value: {e}") from e
    try:
        return default_scenario(
            seed=cfg["seed"] if args.seed is None else args.seed,
            noise_sigma_1m=sim["noise_sigma_1m"],
            noise_exponent=sim["noise_exponent"],
            dropout=sim["dropout"],
            frames_per_config=sim["frames_per_config"],
            occlusion=occlusion,
            with_background=sim["with_background"],
        )
    except (TypeError, ValueError, InvalidDimensions) as e:
        raise ConfigError(f"bad simulator config value: {e}") from e


def _emit_json(payload, output: str | None) -> None:
    data = json_bytes(payload)
    if output is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(output).write_bytes(data)


def _pose_errors_vs(gt, pose) -> tuple[float, float]:
    return translation_error(gt, pose), math.degrees(rotation_error(gt, pose))


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    dataset = generate_dataset(scenario_from_config(cfg, args))
    out = args.output or "dataset"
    save_dataset(dataset, out)
    print(f"wrote {len(dataset.frames)} frames to {out}", file=sys.stderr)
    for w in dataset.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(args.dataset)
    result = calibrate(dataset, pipeline_config(cfg, args))
    _emit_json(result.to_dict(), args.output)
    if dataset.gt_calibration is not None:
        et, er = _pose_errors_vs(dataset.gt_calibration, result.calibration)
        print(
            f"calibration error vs ground truth: et={et:.6e} m er={er:.6e} deg",
            file=sys.stderr,
        )
    print(
        f"used {sum(g.frames_used for g in result.groups)} frames in "
        f"{len(result.groups)} groups, rejected {result.rejected_frames}",
        file=sys.stderr,
    )
    return 0


def cmd_estimate(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(args.dataset)
    if not 0 <= args.frame < len(dataset.frames):
        raise ConfigError(
            f"frame index {args.frame} out of range (dataset has {len(dataset.frames)} frames)"
        )
    pcfg = pipeline_config(cfg, args)
    fe = estimate_frame(
        dataset.frames[args.frame],
        args.frame,
        dataset.model,
        pcfg,
        dataset.gt_calibration,
        trim_fraction=effective_trim_fraction(dataset, pcfg),
        icp_cfg=effective_icp_config(dataset, pcfg),
    )
    if fe.skipped_reason is not None:
        print(f"frame {args.frame} unusable: {fe.skipped_reason}", file=sys.stderr)
        return 5
    candidates = []
    for m in fe.estimates:
        candidates.append({"method": m.method, "refined": False, "pose": m.pose.to_dict()})
        if m.refined_pose is not None:
            candidates.append(
                {
                    "method": m.method,
                    "refined": True,
                    "pose": m.refined_pose.to_dict(),
                    "icp": {
                        "fitness": m.icp.fitness,
                        "inlier_rmse": m.icp.inlier_rmse,
                        "iterations_used": m.icp.iterations_used,
                        "converged": m.icp.converged,
                    },
                }
            )
    payload = {
        "frame_index": fe.frame_index,
        "config_id": fe.config_id,
        "candidate_count": len(candidates),
        "candidates": candidates,
    }
    _emit_json(payload, args.output)
    methods = ", ".join(m.method for m in fe.estimates)
    print(
        f"frame {args.frame}: {len(candidates)} candidates ({methods})",
        file=sys.stderr,
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(args.dataset)
    thresholds = tuple(cfg["evaluation"]["add_thresholds"])
    report = evaluate_dataset(dataset, pipeline_config(cfg, args), thresholds)
    _emit_json(report.to_dict(), args.output)
    table = format_report(report)
    if args.output is None:
        print(table, file=sys.stderr)
    else:
        print(table)
    if cfg["evaluation"]["write_csv"]:
        if args.output is None:
            print("write_csv needs --output to name the CSV file", file=sys.stderr)
        else:
            csv_path = Path(args.output).with_suffix(".csv")
            csv_path.write_text(per_frame_csv(report))
            print(f"wrote per-frame rows to {csv_path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--jobs", type=int, help="worker threads for per-frame stages")
    common.add_argument(
        "--no-icp", action="store_true", dest="no_icp", help="skip ICP refinement"
    )
    common.add_argument("--output", metavar="PATH", help="output file or directory")

    parser = argparse.ArgumentParser(
        prog="depthcal",
        description="Depth-camera extrinsic calibration from end-effector geometry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="render a synthetic dataset")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="calibrate from a dataset")
    p.add_argument("dataset", help="dataset directory")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate", parents=[common], help="estimate one frame's pose")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--frame", type=int, required=True, help="frame index")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", parents=[common], help="score a dataset's estimates")
    p.add_argument("dataset", help="dataset directory")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DatasetError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    except NoUsableFrames as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except MissingGroundTruth as e:
        print(f"error: {e}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
