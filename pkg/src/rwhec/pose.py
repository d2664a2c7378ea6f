"""Single-view camera pose from a planar target.

A homography between the target plane and undistorted normalized image
coordinates gives a first pose, which LM then polishes by minimizing
pixel reprojection error over a 6-dof world->camera transform.
"""

from __future__ import annotations

import numpy as np

from .camera import CameraIntrinsics, project_points, undistort_normalized
from .errors import ExtrinsicsError, InvalidStart, NonFiniteJacobian
from .nlls import SolverOptions, solve_lm
from .se3 import RotationKind, axis_angle_from_rot, make_htm, rotation_matrix

__all__ = ["plane_frame", "homography_dlt", "pose_from_homography", "estimate_pose"]

PLANAR_TOL = 1e-6
MAX_POSE_RRMSE_PX = 50.0
SENTINEL_PX = 1e6


def plane_frame(points):
    """``(T, flatness)`` where ``T`` maps target points into a frame whose z axis
    is the best-fit plane normal; ``flatness`` is the largest out-of-plane
    distance relative to the target extent."""
    pts = np.asarray(points, dtype=float)
    centre = pts.mean(axis=0)
    r = np.linalg.svd(pts - centre)[2]
    if np.linalg.det(r) < 0:
        r[2] = -r[2]
    local = (pts - centre) @ r.T
    extent = float(np.max(np.linalg.norm(local, axis=1))) or 1.0
    return make_htm(r, -r @ centre), float(np.max(np.abs(local[:, 2]))) / extent


def _normalizer(p):
    c = p.mean(axis=0)
    d = np.mean(np.linalg.norm(p - c, axis=1))
    s = np.sqrt(2.0) / d if d > 0 else 1.0
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def homography_dlt(src, dst):
    """Normalized DLT homography mapping 2D ``src`` onto ``dst``."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if len(src) < 4:
        raise ValueError("a homography needs at least 4 correspondences")
    ts, td = _normalizer(src), _normalizer(dst)
    hs = np.c_[src, np.ones(len(src))] @ ts.T
    hd = np.c_[dst, np.ones(len(dst))] @ td.T
    rows = []
    for (x, y, w), (u, v, q) in zip(hs, hd):
        rows.append([0, 0, 0, -q * x, -q * y, -q * w, v * x, v * y, v * w])
        rows.append([q * x, q * y, q * w, 0, 0, 0, -u * x, -u * y, -u * w])
    h = np.linalg.svd(np.asarray(rows))[2][-1].reshape(3, 3)
    h = np.linalg.inv(td) @ h @ ts
    return h / h[2, 2] if abs(h[2, 2]) > 1e-12 else h


def pose_from_homography(h):
    """Plane->camera transform from a homography onto normalized coordinates."""
    h1, h2, h3 = h[:, 0], h[:, 1], h[:, 2]
    lam = 2.0 / (np.linalg.norm(h1) + np.linalg.norm(h2))
    if h3[2] * lam < 0:
        lam = -lam
    r1, r2, t = lam * h1, lam * h2, lam * h3
    u, _, vt = np.linalg.svd(np.column_stack([r1, r2, np.cross(r1, r2)]))
    r = u @ np.diag([1.0, 1.0, np.linalg.det(u @ vt)]) @ vt
    return make_htm(r, t)


def estimate_pose(k: CameraIntrinsics, target, point_idx, uv, camera=0, pose=0,
                  options: SolverOptions | None = None) -> np.ndarray:
    """World->camera transform for one view of ``target``.

    ``point_idx`` selects the observed target points and ``uv`` holds their
    detections. Raises :class:`ExtrinsicsError` naming ``(camera, pose)`` when
    the view is unusable or the fit does not converge.
    """
    target = np.asarray(target, dtype=float)
    point_idx = np.asarray(point_idx, dtype=int)
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    if len(uv) < 4:
        raise ExtrinsicsError(camera, pose, f"only {len(uv)} detections")
    frame, flatness = plane_frame(target)
    if flatness > PLANAR_TOL:
        raise ExtrinsicsError(camera, pose, "target is not planar")
    pts = target[point_idx]
    local = pts @ frame[:3, :3].T + frame[:3, 3]
    kvec = k.as_vector()
    norm = undistort_normalized(kvec, uv)
    try:
        h = homography_dlt(local[:, :2], norm)
    except np.linalg.LinAlgError as exc:
        raise ExtrinsicsError(camera, pose, "homography fit failed") from exc
    a0 = pose_from_homography(h) @ frame

    def residuals(p):
        r = rotation_matrix(RotationKind.AXIS_ANGLE, p[:3])
        pix, ok = project_points(kvec, pts @ r.T + p[3:])
        return np.where(ok[:, None], uv - pix, SENTINEL_PX).ravel()

    x0 = np.r_[axis_angle_from_rot(a0[:3, :3]), a0[:3, 3]]
    try:
        p, report = solve_lm(residuals, options, x0=x0)
    except (InvalidStart, NonFiniteJacobian) as exc:
        raise ExtrinsicsError(camera, pose, str(exc)) from exc
    rrmse = np.sqrt(report.final_cost / len(uv))
    if not np.isfinite(rrmse) or rrmse > MAX_POSE_RRMSE_PX:
        raise ExtrinsicsError(camera, pose, f"reprojection rms {rrmse:.4g} px")
    return make_htm(rotation_matrix(RotationKind.AXIS_ANGLE, p[:3]), p[3:])
