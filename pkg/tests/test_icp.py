"""Tests for ICP pose refinement."""

import math

import numpy as np
import pytest

from conftest import assert_pose_close
from depthcal.errors import ConfigError, NoCorrespondences, TooFewPoints
from depthcal.geometry import (
    LABEL_EE,
    PointCloud,
    Pose,
    Quaternion,
    compose,
    rotation_distance,
)
from depthcal.icp import IcpConfig, icp_refine, refine_estimates, voxel_downsample
from depthcal.kpm import NoisyOracleKeypoints, filter_keypoints, kpm_pose, predict_keypoints
from depthcal.rpt import NoisyOracleRotation, rpt_pose
from depthcal.simulator import default_scenario, generate_dataset


@pytest.fixture(scope="module")
def noiseless_dataset():
    return generate_dataset(default_scenario(frames_per_config=1))


@pytest.fixture(scope="module")
def noisy_dataset():
    return generate_dataset(
        default_scenario(frames_per_config=2, noise_sigma_1m=0.002)
    )


def ee_subset(cloud):
    return cloud.subset(cloud.labels == LABEL_EE)


def perturbed(pose: Pose, t_off, axis, angle_deg) -> Pose:
    q = Quaternion.from_axis_angle(np.asarray(axis, float), math.radians(angle_deg))
    return Pose(q.multiply(pose.rotation), pose.translation + np.asarray(t_off, float))


class TestVoxelDownsample:
    def test_output_is_subset_of_input(self, noiseless_dataset):
        cloud = noiseless_dataset.model.surface_cloud
        out = voxel_downsample(cloud, 0.005)
        rows = {tuple(p) for p in cloud.points}
        assert all(tuple(p) in rows for p in out.points)
        assert len(out) < len(cloud)

    def test_zero_voxel_is_identity(self, noiseless_dataset):
        cloud = noiseless_dataset.model.surface_cloud
        out = voxel_downsample(cloud, 0.0)
        assert len(out) == len(cloud)

    def test_max_points_cap(self, noiseless_dataset):
        cloud = noiseless_dataset.model.surface_cloud
        out = voxel_downsample(cloud, 0.0, max_points=1000)
        assert len(out) == 1000

    def test_one_point_per_voxel(self):
        rng = np.random.default_rng(3)
        cloud = PointCloud(rng.uniform(0, 0.1, size=(500, 3)))
        out = voxel_downsample(cloud, 0.02)
        keys = {tuple(k) for k in np.floor(out.points / 0.02).astype(int)}
        assert len(keys) == len(out)


class TestIcpRefine:
    def test_ground_truth_is_fixed_point(self, noiseless_dataset):
        ds = noiseless_dataset
        frame = ds.frames[0]
        gt = compose(ds.gt_calibration, frame.t_b_ee)
        source = PointCloud(gt.apply(ds.model.surface_cloud.points))
        res = icp_refine(source, ee_subset(frame.cloud), gt)
        assert_pose_close(res.refined_pose, gt, atol_t=1e-9, atol_r=1e-9)
        assert res.iterations_used <= 2
        assert res.converged
        # composition contract: refined pose re-places the model exactly
        # where the internal iteration left the source
        np.testing.assert_allclose(
            res.refined_pose.apply(ds.model.surface_cloud.points),
            source.points,
            atol=1e-9,
        )

    def test_small_offset_recovered(self, noiseless_dataset):
        ds = noiseless_dataset
        for i, frame in enumerate(ds.frames[:3]):
            gt = compose(ds.gt_calibration, frame.t_b_ee)
            start = perturbed(gt, [0.006, -0.006, 0.005], [0.3, 1.0, -0.2], 3.0)
            source = PointCloud(start.apply(ds.model.surface_cloud.points))
            res = icp_refine(source, ee_subset(frame.cloud), start)
            err_t = float(np.linalg.norm(res.refined_pose.translation - gt.translation))
            err_r = math.degrees(rotation_distance(res.refined_pose.rotation, gt.rotation))
            assert err_t < 1e-4, f"frame {i}: {err_t}"
            assert err_r < 0.01, f"frame {i}: {err_r}"

    def test_far_offset_has_no_correspondences(self, noiseless_dataset):
        ds = noiseless_dataset
        frame = ds.frames[0]
        gt = compose(ds.gt_calibration, frame.t_b_ee)
        start = Pose(gt.rotation, gt.translation + np.array([0.5, 0.0, 0.0]))
        source = PointCloud(start.apply(ds.model.surface_cloud.points))
        with pytest.raises(NoCorrespondences):
            icp_refine(source, ee_subset(frame.cloud), start)

    def test_rmse_monotone_on_noisy_frame(self, noisy_dataset):
        ds = noisy_dataset
        for frame in ds.frames[:4]:
            gt = compose(ds.gt_calibration, frame.t_b_ee)
            start = perturbed(gt, [0.01, 0.008, -0.006], [1.0, -0.4, 0.8], 4.0)
            source = PointCloud(start.apply(ds.model.surface_cloud.points))
            res = icp_refine(source, ee_subset(frame.cloud), start)
            diffs = np.diff(res.rmse_history)
            assert np.all(diffs <= 1e-12), diffs

    def test_too_few_points(self):
        tiny = PointCloud(np.zeros((5, 3)))
        big = PointCloud(np.random.default_rng(0).normal(size=(100, 3)))
        with pytest.raises(TooFewPoints):
            icp_refine(tiny, big, Pose.identity())
        with pytest.raises(TooFewPoints):
            icp_refine(big, tiny, Pose.identity())

    def test_fitness_range(self, noisy_dataset):
        ds = noisy_dataset
        frame = ds.frames[0]
        gt = compose(ds.gt_calibration, frame.t_b_ee)
        source = PointCloud(gt.apply(ds.model.surface_cloud.points))
        res = icp_refine(source, ee_subset(frame.cloud), gt)
        assert 0.0 < res.fitness <= 1.0
        assert res.inlier_rmse >= 0.0


class TestIcpConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            IcpConfig(max_correspondence_distance=0.0)
        with pytest.raises(ConfigError):
            IcpConfig(max_iterations=0)
        with pytest.raises(ConfigError):
            IcpConfig(relative_rmse_epsilon=0.0)
        with pytest.raises(ConfigError):
            IcpConfig(source_voxel_size=-1.0)


class TestRefineEstimates:
    def test_two_candidates_two_results(self, noiseless_dataset):
        ds = noiseless_dataset
        frame = ds.frames[0]
        gt = compose(ds.gt_calibration, frame.t_b_ee)
        cands = [
            ("rpt", perturbed(gt, [0.005, 0.0, 0.0], [0, 0, 1], 2.0)),
            ("kpm", perturbed(gt, [0.0, -0.004, 0.003], [1, 0, 0], 1.0)),
        ]
        out = refine_estimates(ee_subset(frame.cloud), cands, ds.model)
        assert [tag for tag, _ in out] == ["rpt", "kpm"]
        for _, res in out:
            err = np.linalg.norm(res.refined_pose.translation - gt.translation)
            assert err < 2e-3

    def test_bad_candidate_skipped(self, noiseless_dataset):
        ds = noiseless_dataset
        frame = ds.frames[0]
        gt = compose(ds.gt_calibration, frame.t_b_ee)
        far = Pose(gt.rotation, gt.translation + np.array([0.0, 0.0, 0.8]))
        out = refine_estimates(
            ee_subset(frame.cloud), [("rpt", gt), ("kpm", far)], ds.model
        )
        assert [tag for tag, _ in out] == ["rpt"]

    def test_all_bad_gives_empty(self, noiseless_dataset):
        ds = noiseless_dataset
        frame = ds.frames[0]
        gt = compose(ds.gt_calibration, frame.t_b_ee)
        far = Pose(gt.rotation, gt.translation + np.array([0.0, 0.0, 0.8]))
        out = refine_estimates(ee_subset(frame.cloud), [("rpt", far), ("kpm", far)], ds.model)
        assert out == []


def _add(est: Pose, true: Pose, pts: np.ndarray) -> float:
    return float(np.mean(np.linalg.norm(est.apply(pts) - true.apply(pts), axis=1)))


def test_refinement_reduces_add_on_noisy_frames(noisy_dataset):
    """Mean alignment error must drop through refinement for both routes."""
    ds = noisy_dataset
    rot_oracle = NoisyOracleRotation(5.0)
    kp_oracle = NoisyOracleKeypoints(sigma_m=0.005, dropout=0.1)
    rng = np.random.default_rng(23)
    pts = ds.model.surface_cloud.points
    before = {"rpt": [], "kpm": []}
    after = {"rpt": [], "kpm": []}
    for frame in ds.frames:
        true_pose = compose(ds.gt_calibration, frame.t_b_ee)
        ee = ee_subset(frame.cloud)
        cands = []
        cands.append(
            ("rpt", rpt_pose(ee, rot_oracle, ds.model, true_pose=true_pose, rng=rng,
                             trim_fraction=0.002))
        )
        preds = filter_keypoints(
            predict_keypoints(ee, kp_oracle, ds.model.ref_keypoints,
                              true_pose=true_pose, rng=rng),
            ee.points,
        )
        if len(preds) >= 4:
            cands.append(("kpm", kpm_pose(preds, ds.model.ref_keypoints)))
        refined = dict(refine_estimates(ee, cands, ds.model))
        for tag, pose in cands:
            if tag in refined:
                before[tag].append(_add(pose, true_pose, pts))
                after[tag].append(_add(refined[tag].refined_pose, true_pose, pts))
    for tag in ("rpt", "kpm"):
        assert len(after[tag]) >= 8
        assert np.mean(after[tag]) < np.mean(before[tag])
