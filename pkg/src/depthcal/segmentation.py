"""Point cloud segmentation interface and spatial cluster filtering.

A SegmentationPredictor stands where a learned per-point classifier would
sit in a deployed system.  The shipped implementations are simulator
oracles: one returns ground-truth labels, one corrupts them with label
flips and false-positive speckle so the downstream robustness can be
tested.  Both run through the identical pipeline code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _sparse_components
from scipy.spatial import cKDTree

from .errors import EmptyCloud, MissingGroundTruth, NoValidCluster
from .geometry import LABEL_EE, PointCloud


@runtime_checkable
class SegmentationPredictor(Protocol):
    def predict(self, cloud: PointCloud, rng: np.random.Generator | None = None) -> np.ndarray:
        """Per-point class labels in {0 background, 1 arm, 2 end-effector}."""
        ...


class GroundTruthSegmenter:
    """Returns the simulator's ground-truth labels unchanged."""

    def predict(self, cloud: PointCloud, rng: np.random.Generator | None = None) -> np.ndarray:
        if cloud.labels is None:
            raise MissingGroundTruth("cloud carries no ground-truth labels")
        return cloud.labels.copy()


@dataclass
class NoisyOracleSegmenter:
    """Ground-truth labels corrupted by two error modes.

    flip_probability: each point independently swaps to one of the other
    two classes.  speckle_rate: each non-EE point is independently
    mislabeled as end effector, producing the scattered false positives
    the cluster filter must reject.
    """

    flip_probability: float = 0.0
    speckle_rate: float = 0.0

    def predict(self, cloud: PointCloud, rng: np.random.Generator | None = None) -> np.ndarray:
        if cloud.labels is None:
            raise MissingGroundTruth("cloud carries no ground-truth labels")
        if rng is None:
            rng = np.random.default_rng(0)
        labels = cloud.labels.copy()
        n = len(labels)
        if self.flip_probability > 0:
            flip = rng.random(n) < self.flip_probability
            labels[flip] = (labels[flip] + rng.integers(1, 3, size=int(flip.sum()))) % 3
        if self.speckle_rate > 0:
            candidates = labels != LABEL_EE
            spark = rng.random(n) < self.speckle_rate
            labels[candidates & spark] = LABEL_EE
        return labels


def predict_labels(
    cloud: PointCloud,
    predictor: SegmentationPredictor,
    rng: np.random.Generator | None = None,
) -> PointCloud:
    """Run a predictor and attach its labels to the cloud."""
    if len(cloud) == 0:
        raise EmptyCloud("cannot segment an empty cloud")
    labels = np.asarray(predictor.predict(cloud, rng), dtype=np.int64)
    if labels.shape != (len(cloud),):
        raise ValueError("predictor returned a label vector of the wrong length")
    if labels.min() < 0 or labels.max() > 2:
        raise ValueError("predictor returned labels outside {0, 1, 2}")
    return PointCloud(cloud.points.copy(), labels=labels,
                      keypoint_ids=None if cloud.keypoint_ids is None else cloud.keypoint_ids.copy())


def _radius_components(points: np.ndarray, radius: float) -> np.ndarray:
    """Exact connected components of the fixed-radius graph.

    Voxel contraction keeps this near O(n log n) on dense clouds: with
    voxel edge radius/sqrt(3) any two points sharing a voxel are within
    radius (the cell diagonal equals the radius), so point components
    equal components of the voxel graph.  Two voxels connect iff their
    point sets come within radius; candidate pairs are screened with
    bounding-box distance bounds and only the survivors pay for an exact
    minimum-distance check.
    """
    n = len(points)
    cell = radius / math.sqrt(3.0)
    keys = np.floor(points / cell).astype(np.int64)
    keys -= keys.min(axis=0)
    flat = np.ravel_multi_index(keys.T, keys.max(axis=0) + 1)
    uniq, inv = np.unique(flat, return_inverse=True)
    nv = len(uniq)
    if nv == 1:
        return np.zeros(n, dtype=np.int64)

    order = np.argsort(inv, kind="stable")
    bounds = np.searchsorted(inv[order], np.arange(nv + 1))
    buckets = [order[bounds[i] : bounds[i + 1]] for i in range(nv)]
    mins = np.array([points[b].min(axis=0) for b in buckets])
    maxs = np.array([points[b].max(axis=0) for b in buckets])
    centers = 0.5 * (mins + maxs)

    # A connecting point pair bounds the center distance of its voxels.
    reach = radius + cell * math.sqrt(3.0) + 1e-12
    pairs = cKDTree(centers).query_pairs(reach, output_type="ndarray")
    r2 = radius * radius
    rows: list[int] = []
    cols: list[int] = []
    if len(pairs):
        a, b = pairs[:, 0], pairs[:, 1]
        gap = np.maximum(0.0, np.maximum(mins[a] - maxs[b], mins[b] - maxs[a]))
        lower2 = (gap * gap).sum(axis=1)
        span = np.maximum(maxs[a], maxs[b]) - np.minimum(mins[a], mins[b])
        upper2 = (span * span).sum(axis=1)
        sure = lower2 <= r2
        direct = sure & (upper2 <= r2)
        rows.extend(a[direct].tolist())
        cols.extend(b[direct].tolist())
        for i in np.flatnonzero(sure & ~direct):
            pa = points[buckets[a[i]]]
            pb = points[buckets[b[i]]]
            d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
            if d2.min() <= r2:
                rows.append(int(a[i]))
                cols.append(int(b[i]))

    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(nv, nv))
    _, vlabels = _sparse_components(graph, directed=False)
    return vlabels[inv]


def cluster_filter(
    ee_points: PointCloud,
    linkage_distance: float = 0.03,
    min_cluster_fraction: float = 0.2,
) -> PointCloud:
    """Keep the largest spatial cluster of the predicted EE points.

    Clusters are single-linkage components at linkage_distance.  Clusters
    holding less than min_cluster_fraction of the input are discarded;
    if none remains, NoValidCluster.  Size ties go to the cluster with the
    lower centroid x, then to the one containing the lowest point index.
    """
    if len(ee_points) == 0:
        raise EmptyCloud("no end-effector points to cluster")
    if linkage_distance <= 0:
        raise ValueError("linkage_distance must be positive")
    comp = _radius_components(ee_points.points, linkage_distance)
    sizes = np.bincount(comp)
    min_count = min_cluster_fraction * len(ee_points)
    eligible = np.flatnonzero(sizes >= min_count)
    if len(eligible) == 0:
        raise NoValidCluster(
            f"largest cluster holds {sizes.max()} of {len(ee_points)} points, "
            f"below the {min_cluster_fraction:.0%} minimum"
        )
    best_size = sizes[eligible].max()
    candidates = [c for c in eligible if sizes[c] == best_size]
    if len(candidates) > 1:
        cx = [float(ee_points.points[comp == c, 0].mean()) for c in candidates]
        first = [int(np.flatnonzero(comp == c)[0]) for c in candidates]
        candidates = [candidates[int(np.lexsort((first, cx))[0])]]
    return ee_points.subset(comp == candidates[0])
