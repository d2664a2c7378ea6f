import numpy as np
import pytest

from rwhec.camera import make_chessboard, project_points
from rwhec.errors import ExtrinsicsError
from rwhec.pose import estimate_pose, homography_dlt, plane_frame, pose_from_homography
from rwhec.se3 import make_htm, rotation_angle
from rwhec.simulate import default_intrinsics


def test_plane_frame_flattens_target():
    board = make_chessboard(4, 5, 10.0)
    tilt = make_htm(np.array([[1.0, 0, 0], [0, 0.6, -0.8], [0, 0.8, 0.6]]), [5.0, -2.0, 40.0])
    pts = board @ tilt[:3, :3].T + tilt[:3, 3]
    t, flatness = plane_frame(pts)
    local = pts @ t[:3, :3].T + t[:3, 3]
    assert flatness < 1e-12
    assert np.allclose(local[:, 2], 0.0, atol=1e-9)
    assert np.allclose(local.mean(axis=0), 0.0, atol=1e-9)


def test_homography_maps_points():
    rng = np.random.default_rng(0)
    h = np.array([[1.2, 0.1, 3.0], [-0.2, 0.9, 1.0], [1e-3, 2e-3, 1.0]])
    src = rng.uniform(-10, 10, (12, 2))
    dst_h = np.c_[src, np.ones(12)] @ h.T
    dst = dst_h[:, :2] / dst_h[:, 2:]
    assert np.allclose(homography_dlt(src, dst), h, atol=1e-9)


def test_pose_from_exact_homography():
    r = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = np.array([0.1, -0.2, 3.0])
    h = np.column_stack([r[:, 0], r[:, 1], t]) * 0.37
    pose = pose_from_homography(h)
    assert np.allclose(pose[:3, :3], r) and np.allclose(pose[:3, 3], t)


def test_estimate_pose_matches_generator(synth_clean):
    ds = synth_clean
    cam = ds.problem.cameras[0]
    obs = cam.observations
    for i in range(0, 25, 6):
        m = obs.pose == i
        a = estimate_pose(cam.intrinsics, ds.problem.target, obs.point[m], obs.uv[m], pose=i)
        assert rotation_angle(a[:3, :3].T @ cam.a_poses[i][:3, :3]) < 1e-6
        assert np.linalg.norm(a[:3, 3] - cam.a_poses[i][:3, 3]) < 1e-6


def test_estimate_pose_with_noise(synth_clean):
    ds = synth_clean
    cam = ds.problem.cameras[0]
    obs = cam.observations
    m = obs.pose == 3
    uv = obs.uv[m] + np.random.default_rng(0).normal(0, 0.3, (m.sum(), 2))
    a = estimate_pose(cam.intrinsics, ds.problem.target, obs.point[m], uv)
    assert np.degrees(rotation_angle(a[:3, :3].T @ cam.a_poses[3][:3, :3])) < 0.5


def test_too_few_detections(synth_clean):
    ds = synth_clean
    k = ds.intrinsics[0]
    with pytest.raises(ExtrinsicsError, match="camera 0, pose 7") as info:
        estimate_pose(k, ds.problem.target, [0, 1, 2], np.zeros((3, 2)), camera=0, pose=7)
    assert (info.value.camera, info.value.pose) == (0, 7)


def test_non_planar_target_rejected():
    rng = np.random.default_rng(1)
    target = rng.uniform(0, 50, (10, 3))
    k = default_intrinsics()
    a = make_htm(np.eye(3), [0.0, 0.0, 300.0])
    uv, _ = project_points(k, target + a[:3, 3])
    with pytest.raises(ExtrinsicsError, match="planar"):
        estimate_pose(k, target, np.arange(10), uv)
