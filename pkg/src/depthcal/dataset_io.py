"""On-disk dataset format and deterministic JSON helpers.

A dataset directory holds manifest.json plus one ASCII PLY per frame.
PLY vertices carry x y z (float, meters), label (uchar) and keypoint_id
(int, -1 for none).  All floats are written at fixed 9-digit precision,
so identical data always serializes to identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .geometry import PointCloud, Pose
from .simulator import Dataset, Frame, build_ee_model_from_params

MANIFEST_NAME = "manifest.json"
FORMAT_TAG = "depthcal-dataset-v1"

_PLY_HEADER = """ply
format ascii 1.0
element vertex {n}
property float x
property float y
property float z
property uchar label
property int keypoint_id
end_header
"""


def round_floats(obj):
    """Copy of a JSON-ish structure with every float rounded to 9 digits."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise DatasetError("non-finite float in serialized structure")
        return round(obj, 9)
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def dump_json(obj, path: Path | str) -> None:
    text = json.dumps(round_floats(obj), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def json_bytes(obj) -> bytes:
    return (json.dumps(round_floats(obj), indent=2, sort_keys=True) + "\n").encode()


def write_ply(path: Path | str, cloud: PointCloud) -> None:
    n = len(cloud)
    labels = cloud.labels if cloud.labels is not None else np.zeros(n, dtype=np.int64)
    ids = cloud.keypoint_ids if cloud.keypoint_ids is not None else np.full(n, -1, np.int64)
    table = np.column_stack([cloud.points, labels.astype(float), ids.astype(float)])
    with open(path, "w") as fh:
        fh.write(_PLY_HEADER.format(n=n))
        np.savetxt(fh, table, fmt="%.9f %.9f %.9f %d %d")


def read_ply(path: Path | str) -> PointCloud:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from e
    if not lines or lines[0].strip() != "ply":
        raise DatasetError(f"{path} is not a PLY file")
    n = None
    body_at = None
    for i, line in enumerate(lines):
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            n = int(parts[2])
        if line.strip() == "end_header":
            body_at = i + 1
            break
    if n is None or body_at is None:
        raise DatasetError(f"{path} has a malformed PLY header")
    data = np.loadtxt(lines[body_at : body_at + n], dtype=float, ndmin=2)
    if len(data) != n or data.shape[1] != 5:
        raise DatasetError(f"{path} vertex data does not match its header")
    return PointCloud(
        data[:, :3],
        labels=data[:, 3].astype(np.int64),
        keypoint_ids=data[:, 4].astype(np.int64),
    )


def save_dataset(dataset: Dataset, directory: Path | str) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    for i, frame in enumerate(dataset.frames):
        name = f"frame_{i:05d}.ply"
        write_ply(directory / name, frame.cloud)
        records.append(
            {"file": name, "config_id": frame.config_id, "t_b_ee": frame.t_b_ee.to_dict()}
        )
    manifest = {
        "format": FORMAT_TAG,
        "gt_calibration": (
            None if dataset.gt_calibration is None else dataset.gt_calibration.to_dict()
        ),
        "ee_model": dataset.model.params,
        "scenario": dataset.scenario,
        "warnings": dataset.warnings,
        "frames": records,
    }
    dump_json(manifest, directory / MANIFEST_NAME)
    return directory


def load_dataset(directory: Path | str) -> Dataset:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatasetError(f"no {MANIFEST_NAME} in {directory}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DatasetError(f"cannot parse {manifest_path}: {e}") from e
    if manifest.get("format") != FORMAT_TAG:
        raise DatasetError(f"{manifest_path} has unknown format tag {manifest.get('format')!r}")
    if manifest.get("ee_model") is None:
        raise DatasetError(f"{manifest_path} is missing the end-effector model parameters")

    gt = manifest.get("gt_calibration")
    frames = []
    for rec in manifest.get("frames", []):
        cloud = read_ply(directory / rec["file"])
        frames.append(Frame(cloud, int(rec["config_id"]), Pose.from_dict(rec["t_b_ee"])))
    return Dataset(
        frames=frames,
        gt_calibration=None if gt is None else Pose.from_dict(gt),
        model=build_ee_model_from_params(manifest["ee_model"]),
        scenario=manifest.get("scenario", {}),
        warnings=list(manifest.get("warnings", [])),
    )
