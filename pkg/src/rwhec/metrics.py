"""Error metrics for estimated ``X`` and ``Z``.

Real-data metrics (no ground truth) measure how well ``A_i X = Z B_i`` holds
and how well the calibration reprojects and reconstructs the target.
Simulation metrics compare directly against the true transforms.

For several cameras the algebraic metrics average over every visible
``(camera, pose)`` pair, while ``rrmse`` is reported per camera.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .camera import CameraIntrinsics, project_points, undistort_normalized
from .errors import InsufficientViews
from .nlls import SolverOptions, solve_lm
from .problem import CalibProblem, CalibResult

__all__ = [
    "MetricsReport",
    "e_r1",
    "e_r2",
    "e_t",
    "e_c",
    "per_pose_errors",
    "Triangulation",
    "triangulate_point",
    "reconstruction_errors",
    "rae",
    "sim_errors",
    "evaluate",
]

PARALLEL_RAY_DEG = 0.1
SENTINEL_PX = 1e6


@dataclass
class MetricsReport:
    e_r1: float
    e_r2: float
    e_t: float
    e_c: float
    rrmse_per_camera: list = field(default_factory=list)
    rae: float | None = None
    rae_sq: float | None = None
    runtime_s: float = 0.0


def per_pose_errors(result: CalibResult, problem: CalibProblem, camera=None) -> dict:
    """Per-pose rotation, angle, translation and combined errors.

    Returns arrays keyed ``"r1"``, ``"angle"`` (radians), ``"t"`` and ``"c"``
    over the visible poses of ``camera`` (all cameras if None).
    """
    cams = range(problem.n_cameras) if camera is None else [camera]
    r1, ang, tt, cc = [], [], [], []
    rx, tx = result.x[:3, :3], result.x[:3, 3]
    for d in cams:
        cam = problem.cameras[d]
        idx = list(cam.visibility)
        a = np.stack([cam.a_poses[i] for i in idx])
        b = problem.b_poses[idx]
        z = result.z[d]
        rz, tz = z[:3, :3], z[:3, 3]
        lhs = a[:, :3, :3] @ rx
        rhs = rz @ b[:, :3, :3]
        r1.append(np.sum((lhs - rhs) ** 2, axis=(1, 2)))
        rel = np.swapaxes(rhs, 1, 2) @ lhs
        cos = (np.trace(rel, axis1=1, axis2=2) - 1.0) / 2.0
        skew = np.stack([rel[:, 2, 1] - rel[:, 1, 2], rel[:, 0, 2] - rel[:, 2, 0],
                         rel[:, 1, 0] - rel[:, 0, 1]], axis=1)
        ang.append(np.arctan2(0.5 * np.linalg.norm(skew, axis=1), cos))
        dt = (a[:, :3, :3] @ tx + a[:, :3, 3]) - (b[:, :3, 3] @ rz.T + tz)
        tt.append(np.sum(dt ** 2, axis=1))
        cc.append(np.sum((a @ result.x - z @ b) ** 2, axis=(1, 2)))
    return {"r1": np.concatenate(r1), "angle": np.concatenate(ang),
            "t": np.concatenate(tt), "c": np.concatenate(cc)}


def e_r1(result, problem, camera=None) -> float:
    """Mean squared Frobenius distance between ``R_A R_X`` and ``R_Z R_B``."""
    return float(np.mean(per_pose_errors(result, problem, camera)["r1"]))


def e_r2(result, problem, camera=None) -> float:
    """Mean angle (degrees) of the relative rotation ``(R_Z R_B)^T R_A R_X``."""
    return float(np.degrees(np.mean(per_pose_errors(result, problem, camera)["angle"])))


def e_t(result, problem, camera=None) -> float:
    """Mean squared translation residual ``|R_A t_X + t_A - R_Z t_B - t_Z|^2`` (length units squared)."""
    return float(np.mean(per_pose_errors(result, problem, camera)["t"]))


def e_c(result, problem, camera=None) -> float:
    return float(np.mean(per_pose_errors(result, problem, camera)["c"]))


def sim_errors(est_x, est_z, true_x, true_z):
    """``(e_RX, e_RZ, e_tX, e_tZ)`` between estimated and true transforms."""
    est_x, est_z, true_x, true_z = (np.asarray(m, dtype=float) for m in (est_x, est_z, true_x, true_z))
    return (float(np.linalg.norm(est_x[:3, :3] - true_x[:3, :3])),
            float(np.linalg.norm(est_z[:3, :3] - true_z[:3, :3])),
            float(np.linalg.norm(est_x[:3, 3] - true_x[:3, 3])),
            float(np.linalg.norm(est_z[:3, 3] - true_z[:3, 3])))


# ---------------------------------------------------------------------------
# triangulation and reconstruction accuracy

class Triangulation(NamedTuple):
    point: np.ndarray
    ill_conditioned: bool
    cost: float


def _as_kvec(k):
    return k.as_vector() if isinstance(k, CameraIntrinsics) else np.asarray(k, dtype=float)


def _midpoint(c1, d1, c2, d2):
    # closest points c1 + s d1 and c2 + u d2
    w = c1 - c2
    a, b, c = d1 @ d1, d1 @ d2, d2 @ d2
    d, e = d1 @ w, d2 @ w
    den = a * c - b * b
    if den < 1e-15:
        s, u = 0.0, e / c
    else:
        s = (b * e - c * d) / den
        u = (a * e - b * d) / den
    return 0.5 * ((c1 + s * d1) + (c2 + u * d2))


def triangulate_point(uv, poses, intrinsics, options=None) -> Triangulation:
    """Most likely world point behind a set of pixel observations.

    ``poses[i]`` is the world->camera transform of observation ``i`` and
    ``intrinsics`` is one camera model or one per observation. The estimate
    minimizes reprojection error, seeded by the midpoint of the two most
    divergent viewing rays.
    """
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    poses = np.asarray(poses, dtype=float).reshape(-1, 4, 4)
    n = len(uv)
    if n < 2:
        raise InsufficientViews(f"need at least 2 observations, got {n}")
    if isinstance(intrinsics, CameraIntrinsics) or (
            not isinstance(intrinsics, (list, tuple)) and np.ndim(intrinsics) == 1):
        ks = [intrinsics] * n
    else:
        ks = list(intrinsics)
    kvecs = np.stack([_as_kvec(k) for k in ks])

    groups = {}
    for idx in range(n):
        groups.setdefault(kvecs[idx].tobytes(), []).append(idx)
    groups = [(kvecs[g[0]], np.array(g)) for g in groups.values()]

    norm = np.empty((n, 2))
    for kv, idx in groups:
        norm[idx] = undistort_normalized(kv, uv[idx])
    rt = np.swapaxes(poses[:, :3, :3], 1, 2)
    centres = -np.einsum("nij,nj->ni", rt, poses[:, :3, 3])
    dirs = np.einsum("nij,nj->ni", rt, np.c_[norm, np.ones(n)])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cosines = np.clip(dirs @ dirs.T, -1.0, 1.0)
    np.fill_diagonal(cosines, 2.0)
    i, j = np.unravel_index(np.argmin(cosines), cosines.shape)
    widest = np.degrees(np.arccos(cosines[i, j]))
    ill = bool(widest < PARALLEL_RAY_DEG)
    seed = _midpoint(centres[i], dirs[i], centres[j], dirs[j])

    def residuals(y):
        pc = poses[:, :3, :3] @ y + poses[:, :3, 3]
        res = np.empty((n, 2))
        for kv, idx in groups:
            pix, ok = project_points(kv, pc[idx])
            res[idx] = np.where(ok[:, None], uv[idx] - pix, SENTINEL_PX)
        return res.ravel()

    point, report = solve_lm(residuals, options or SolverOptions(), x0=seed)
    return Triangulation(point, ill, report.final_cost)


def _camera_poses(result, problem, d):
    return result.z[d] @ problem.b_poses @ result.x_tilde


def reconstruction_errors(result: CalibResult, problem: CalibProblem, intrinsics=None):
    """``(rae, rae_sq)``: mean distance and mean squared distance between
    triangulated and true target points, over points seen at least twice."""
    if problem.target is None:
        raise ValueError("reconstruction accuracy needs a target model")
    ks = intrinsics or [c.intrinsics for c in problem.cameras]
    uv_all, pose_all, k_all, pt_all = [], [], [], []
    for d, cam in enumerate(problem.cameras):
        obs = cam.visible_observations()
        cams = _camera_poses(result, problem, d)
        uv_all.append(obs.uv)
        pose_all.append(cams[obs.pose])
        pt_all.append(obs.point)
        k_all.extend([ks[d]] * len(obs))
    uv_all = np.concatenate(uv_all)
    pose_all = np.concatenate(pose_all)
    pt_all = np.concatenate(pt_all)
    dists = []
    for j in range(len(problem.target)):
        sel = np.flatnonzero(pt_all == j)
        if len(sel) < 2:
            continue
        tri = triangulate_point(uv_all[sel], pose_all[sel], [k_all[s] for s in sel])
        if tri.ill_conditioned:
            warnings.warn(f"target point {j}: viewing rays are nearly parallel", RuntimeWarning)
        dists.append(np.linalg.norm(tri.point - problem.target[j]))
    if not dists:
        raise InsufficientViews("no target point is observed from two poses")
    dists = np.asarray(dists)
    return float(np.mean(dists)), float(np.mean(dists ** 2))


def rae(result, problem, intrinsics=None) -> float:
    """Mean Euclidean distance (length units) between reconstructed and true target points."""
    return reconstruction_errors(result, problem, intrinsics)[0]


def evaluate(result: CalibResult, problem: CalibProblem, intrinsics=None, runtime_s=0.0) -> MetricsReport:
    """All metrics the dataset supports; image metrics are skipped without observations."""
    from .reproj import compute_rsse

    errs = per_pose_errors(result, problem) if problem.has_a_poses() else None
    if errs is not None:
        rep = MetricsReport(float(np.mean(errs["r1"])), float(np.degrees(np.mean(errs["angle"]))),
                            float(np.mean(errs["t"])), float(np.mean(errs["c"])), runtime_s=runtime_s)
    else:
        rep = MetricsReport(np.nan, np.nan, np.nan, np.nan, runtime_s=runtime_s)
    if problem.has_observations() and (intrinsics or problem.has_intrinsics()):
        ks = intrinsics or [c.intrinsics for c in problem.cameras]
        _, rrmse = compute_rsse(result.x, result.z, ks, problem, x_tilde=result.x_tilde)
        rep.rrmse_per_camera = list(rrmse)
        try:
            rep.rae, rep.rae_sq = reconstruction_errors(result, problem, ks)
        except InsufficientViews:
            pass
    return rep
