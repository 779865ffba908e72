"""Pose route 1: predict the end-effector rotation, then derive the
translation from axis extents of the de-rotated cloud.

Once the end-effector points are rotated back into the model's own
orientation, every coordinate of the origin sits at a known offset from
the cloud extent along that axis (a fixed inset behind the front face in
x, centered in y, on the finger-tip plane in z).  Reading those extents
and rotating the offset forward by the predicted rotation yields the
full pose from a rotation estimate alone.  The whole end-effector must
be in view: a missing extreme face shifts the recovered translation by
the size of the missing chunk, which is why multi-frame aggregation
treats this route's output as just one vote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import MissingGroundTruth, TooFewPoints
from .geometry import PointCloud, Pose, Quaternion
from .simulator import AxisRule, EEModel

MIN_RPT_POINTS = 10


class RotationPredictor(Protocol):
    """Estimates the end-effector rotation in the camera frame.

    true_pose carries the simulator ground truth for oracle
    implementations; a learned predictor would ignore it.
    """

    def predict(
        self,
        ee_cloud: PointCloud,
        true_pose: Pose | None,
        rng: np.random.Generator | None,
    ) -> Quaternion: ...


@dataclass
class NoisyOracleRotation:
    """Ground-truth rotation perturbed by a random axis-angle.

    Stand-in for a trained rotation network: the perturbation axis is
    uniform on the sphere and the angle is N(0, sigma_deg).
    """

    sigma_deg: float = 0.0

    def predict(
        self,
        ee_cloud: PointCloud,
        true_pose: Pose | None,
        rng: np.random.Generator | None,
    ) -> Quaternion:
        if true_pose is None:
            raise MissingGroundTruth("rotation oracle requires the true pose")
        if self.sigma_deg == 0.0:
            return true_pose.rotation
        if rng is None:
            raise ValueError("a noisy rotation oracle needs an rng")
        axis = rng.normal(size=3)
        n = np.linalg.norm(axis)
        if n < 1e-12:
            axis = np.array([0.0, 0.0, 1.0])
            n = 1.0
        angle = math.radians(self.sigma_deg) * rng.normal()
        return Quaternion.from_axis_angle(axis / n, angle).multiply(true_pose.rotation)


def rotate_back(ee_cloud: PointCloud, r_pred: Quaternion) -> PointCloud:
    """Rotate points by the inverse predicted rotation.

    Pure rotation: no translation is applied or removed.
    """
    pts = ee_cloud.points @ r_pred.rotation_matrix()  # p @ R == R^T p
    return PointCloud(pts, labels=ee_cloud.labels, keypoint_ids=ee_cloud.keypoint_ids)


def _extent(values: np.ndarray, trim_fraction: float) -> tuple[float, float]:
    """Min/max after dropping the trim_fraction most extreme points per side."""
    if trim_fraction <= 0.0:
        return float(values.min()), float(values.max())
    k = int(math.ceil(trim_fraction * len(values)))
    k = min(k, (len(values) - 1) // 2)
    s = np.sort(values)
    return float(s[k]), float(s[len(s) - 1 - k])


def rpt_translation(
    rotated_points: np.ndarray,
    descriptor: Sequence[AxisRule],
    r_pred: Quaternion,
    *,
    trim_fraction: float = 0.0,
) -> np.ndarray:
    """Translation from the extents of the de-rotated end-effector cloud.

    trim_fraction > 0 discards that fraction of the most extreme points
    on each side of every axis before reading the extent, so a stray
    noise point cannot shift the estimate by itself.  Leave it at 0 for
    noise-free input, where the extremes are exact.
    """
    pts = np.asarray(rotated_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise TooFewPoints("expected an (n, 3) point array")
    if len(pts) < MIN_RPT_POINTS:
        raise TooFewPoints(
            f"extent reading needs at least {MIN_RPT_POINTS} points, got {len(pts)}"
        )
    t_bar = np.zeros(3)
    for rule in descriptor:
        lo, hi = _extent(pts[:, rule.axis], trim_fraction)
        if rule.extreme == "max":
            t_bar[rule.axis] = hi - rule.inset
        elif rule.extreme == "min":
            t_bar[rule.axis] = lo + rule.inset
        else:  # mid
            t_bar[rule.axis] = 0.5 * (lo + hi)
    return r_pred.rotate(t_bar)


def rpt_pose(
    ee_cloud: PointCloud,
    predictor: RotationPredictor,
    model: EEModel,
    *,
    true_pose: Pose | None = None,
    rng: np.random.Generator | None = None,
    trim_fraction: float = 0.0,
) -> Pose:
    """Full route: predict rotation, de-rotate, read extents, assemble pose."""
    r_pred = predictor.predict(ee_cloud, true_pose, rng)
    de_rotated = rotate_back(ee_cloud, r_pred)
    t = rpt_translation(
        de_rotated.points, model.rpt_descriptor, r_pred, trim_fraction=trim_fraction
    )
    return Pose(r_pred, t)
