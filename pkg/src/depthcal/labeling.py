"""Automatic point labeling for segmentation training data.

Given a frame, a robot-free reference capture of the same static scene,
the forward kinematics and the calibration, these operations produce
per-point class labels and keypoint tags without manual annotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud
from .geometry import (
    LABEL_ARM,
    LABEL_BACKGROUND,
    LABEL_EE,
    NO_KEYPOINT,
    PointCloud,
    Pose,
    compose,
    invert,
)


@dataclass
class LabelingConfig:
    background_match_radius: float = 0.005
    ee_bbox_inflation: float = 0.01
    keypoint_distance_threshold: float = 0.01


def subtract_background(
    frame_cloud: PointCloud, background_cloud: PointCloud, cfg: LabelingConfig | None = None
) -> PointCloud:
    """Split a frame into background and arm points.

    A point is background iff the robot-free reference capture has a point
    within background_match_radius of it; everything else is arm.
    """
    cfg = cfg or LabelingConfig()
    if len(frame_cloud) == 0:
        raise EmptyCloud("frame cloud is empty")
    if len(background_cloud) == 0:
        raise EmptyCloud("background reference cloud is empty")
    d, _ = cKDTree(background_cloud.points).query(frame_cloud.points)
    labels = np.where(d <= cfg.background_match_radius, LABEL_BACKGROUND, LABEL_ARM)
    return PointCloud(frame_cloud.points.copy(), labels=labels.astype(np.int64))


def extract_ee_points(
    labeled_cloud: PointCloud,
    calibration: Pose,
    t_b_ee: Pose,
    ee_bbox: np.ndarray,
    cfg: LabelingConfig | None = None,
) -> PointCloud:
    """Promote arm points inside the end-effector's bounding box to EE.

    The box is the model's axis-aligned bbox in the end-effector frame,
    inflated by ee_bbox_inflation, placed through calibration and forward
    kinematics.  Background labels are untouched.
    """
    cfg = cfg or LabelingConfig()
    if len(labeled_cloud) == 0:
        raise EmptyCloud("labeled cloud is empty")
    if labeled_cloud.labels is None:
        raise ValueError("cloud has no labels; run subtract_background first")
    ee_pose = compose(calibration, t_b_ee)
    local = invert(ee_pose).apply(labeled_cloud.points)
    lo = np.asarray(ee_bbox[0], float) - cfg.ee_bbox_inflation
    hi = np.asarray(ee_bbox[1], float) + cfg.ee_bbox_inflation
    inside = np.all((local >= lo) & (local <= hi), axis=1)
    labels = labeled_cloud.labels.copy()
    labels[inside & (labels == LABEL_ARM)] = LABEL_EE
    return PointCloud(labeled_cloud.points.copy(), labels=labels)


def label_keypoints(
    labeled_cloud: PointCloud,
    ee_pose_in_camera: Pose,
    ref_keypoints: np.ndarray,
    cfg: LabelingConfig | None = None,
) -> PointCloud:
    """Tag the EE point nearest each transformed reference keypoint.

    A keypoint is assigned only when that nearest point lies within
    keypoint_distance_threshold.  Each cloud point takes at most one id;
    on conflict the smaller keypoint index wins and ties in distance go to
    the smaller point index.
    """
    cfg = cfg or LabelingConfig()
    if len(labeled_cloud) == 0:
        raise EmptyCloud("labeled cloud is empty")
    if labeled_cloud.labels is None:
        raise ValueError("cloud has no labels")
    refs_cam = ee_pose_in_camera.apply(np.asarray(ref_keypoints, float))
    ids = np.full(len(labeled_cloud), NO_KEYPOINT, dtype=np.int64)
    ee_idx = np.flatnonzero(labeled_cloud.labels == LABEL_EE)
    if len(ee_idx) == 0:
        return PointCloud(labeled_cloud.points.copy(), labels=labeled_cloud.labels.copy(),
                          keypoint_ids=ids)
    ee_pts = labeled_cloud.points[ee_idx]
    taken = np.zeros(len(ee_idx), dtype=bool)
    for k, ref in enumerate(refs_cam):
        d = np.linalg.norm(ee_pts - ref, axis=1)
        d[taken] = np.inf
        j = int(np.argmin(d))  # argmin takes the smallest index on ties
        if d[j] <= cfg.keypoint_distance_threshold:
            ids[ee_idx[j]] = k
            taken[j] = True
    return PointCloud(
        labeled_cloud.points.copy(), labels=labeled_cloud.labels.copy(), keypoint_ids=ids
    )
