"""Pinhole camera with rational radial and tangential distortion.

Intrinsics are ``(fx, fy, cx, cy)`` plus eight distortion coefficients in the
order ``(k1, k2, p1, p2, k3, k4, k5, k6)``, twelve numbers in total.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import PointBehindCamera

__all__ = [
    "CameraIntrinsics",
    "Observations",
    "project",
    "project_points",
    "project_chain",
    "undistort_normalized",
    "make_chessboard",
    "check_target",
    "load_intrinsics",
    "save_intrinsics",
    "load_target",
    "save_target",
    "load_observations",
    "save_observations",
    "OBSERVATION_HEADER",
]

MIN_DEPTH = 1e-9
OBSERVATION_HEADER = ["camera", "pose", "point", "u", "v"]


@dataclass(frozen=True, eq=False)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    dist: np.ndarray = field(default_factory=lambda: np.zeros(8))

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float).reshape(-1)
        if d.size != 8:
            raise ValueError(f"expected 8 distortion coefficients, got {d.size}")
        object.__setattr__(self, "dist", d)
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.fx, self.fy, self.cx, self.cy], self.dist])

    def __eq__(self, other):
        if not isinstance(other, CameraIntrinsics):
            return NotImplemented
        return bool(np.array_equal(self.as_vector(), other.as_vector()))

    def __hash__(self):
        return hash(self.as_vector().tobytes())

    @classmethod
    def from_vector(cls, k) -> "CameraIntrinsics":
        k = np.asarray(k, dtype=float)
        return cls(float(k[0]), float(k[1]), float(k[2]), float(k[3]), k[4:12].copy())

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def image_size(self) -> tuple[float, float]:
        """Nominal image extent, assuming a centred principal point."""
        return 2.0 * self.cx, 2.0 * self.cy


@dataclass
class Observations:
    """Detected image points of one camera, one row per (pose, point)."""

    pose: np.ndarray
    point: np.ndarray
    uv: np.ndarray

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=int).reshape(-1)
        self.point = np.asarray(self.point, dtype=int).reshape(-1)
        self.uv = np.asarray(self.uv, dtype=float).reshape(-1, 2)
        if not (len(self.pose) == len(self.point) == len(self.uv)):
            raise ValueError("observation arrays have mismatched lengths")
        keys = self.pose.astype(np.int64) * (int(self.point.max(initial=0)) + 1) + self.point
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate (pose, point) observation")

    def __len__(self):
        return len(self.pose)

    def subset(self, mask) -> "Observations":
        return Observations(self.pose[mask], self.point[mask], self.uv[mask])

    def for_poses(self, poses) -> "Observations":
        return self.subset(np.isin(self.pose, np.fromiter(poses, dtype=int)))


def _distort(dist, xn, yn):
    k1, k2, p1, p2, k3, k4, k5, k6 = dist
    r2 = xn * xn + yn * yn
    r4 = r2 * r2
    r6 = r4 * r2
    radial = (1 + k1 * r2 + k2 * r4 + k3 * r6) / (1 + k4 * r2 + k5 * r4 + k6 * r6)
    xy = xn * yn
    xd = xn * radial + 2 * p1 * xy + p2 * (r2 + 2 * xn * xn)
    yd = yn * radial + p1 * (r2 + 2 * yn * yn) + 2 * p2 * xy
    return xd, yd


def project_points(k, pts_cam):
    """Vectorized projection of camera-frame points.

    ``k`` is a :class:`CameraIntrinsics` or a 12-vector. Returns ``(uv, ok)``
    where ``ok`` flags points in front of the camera; rows with ``ok`` false
    hold NaN.
    """
    kv = k.as_vector() if isinstance(k, CameraIntrinsics) else np.asarray(k, dtype=float)
    pts = np.asarray(pts_cam, dtype=float).reshape(-1, 3)
    z = pts[:, 2]
    ok = z > MIN_DEPTH
    zs = np.where(ok, z, np.nan)
    xd, yd = _distort(kv[4:12], pts[:, 0] / zs, pts[:, 1] / zs)
    uv = np.column_stack([kv[0] * xd + kv[2], kv[1] * yd + kv[3]])
    return uv, ok


def project(k, point_cam) -> np.ndarray:
    """Project one camera-frame point to pixels."""
    p = np.asarray(point_cam, dtype=float)
    if not p[2] > MIN_DEPTH:
        raise PointBehindCamera(f"point depth {p[2]:g} is not in front of the camera")
    uv, _ = project_points(k, p[None])
    return uv[0]


def project_chain(k, z, b, x_tilde, point) -> np.ndarray:
    """Image of a world point through ``Z @ B @ X^-1`` (``x_tilde`` is ``X^-1``)."""
    m = (np.asarray(z) @ np.asarray(b) @ np.asarray(x_tilde))[:3]
    return project(k, m[:, :3] @ np.asarray(point, dtype=float) + m[:, 3])


def undistort_normalized(k, uv, iterations=30) -> np.ndarray:
    """Normalized image coordinates of pixels, inverting distortion iteratively."""
    kv = k.as_vector() if isinstance(k, CameraIntrinsics) else np.asarray(k, dtype=float)
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    xd = (uv[:, 0] - kv[2]) / kv[0]
    yd = (uv[:, 1] - kv[3]) / kv[1]
    x, y = xd.copy(), yd.copy()
    for _ in range(iterations):
        fx_, fy_ = _distort(kv[4:12], x, y)
        x = x - (fx_ - xd)
        y = y - (fy_ - yd)
    return np.column_stack([x, y])


def make_chessboard(rows: int, cols: int, square_mm: float) -> np.ndarray:
    """Corner grid on the z = 0 plane, row-major with x varying fastest.

    ``cols`` corners run along x and ``rows`` along y.
    """
    if rows < 2 or cols < 2 or not square_mm > 0:
        raise ValueError("chessboard needs rows >= 2, cols >= 2 and a positive square size")
    yy, xx = np.mgrid[0:rows, 0:cols]
    pts = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(rows * cols)]) * float(square_mm)
    return pts


def check_target(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 4:
        raise ValueError("target needs at least 4 points")
    centred = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1e-300):
        raise ValueError("target points are collinear")
    return pts


# ---------------------------------------------------------------------------
# file formats

def load_intrinsics(path) -> CameraIntrinsics:
    with open(path) as f:
        lines = [ln.split() for ln in f if ln.strip()]
    if len(lines) < 2 or len(lines[0]) != 4 or len(lines[1]) != 8:
        raise ValueError(f"{path}: expected 'fx fy cx cy' then 8 distortion coefficients")
    fx, fy, cx, cy = (float(v) for v in lines[0])
    return CameraIntrinsics(fx, fy, cx, cy, [float(v) for v in lines[1]])


def save_intrinsics(path, k: CameraIntrinsics) -> None:
    with open(path, "w") as f:
        f.write(" ".join(repr(float(v)) for v in (k.fx, k.fy, k.cx, k.cy)) + "\n")
        f.write(" ".join(repr(float(v)) for v in k.dist) + "\n")


def load_target(path) -> np.ndarray:
    with open(path) as f:
        lines = [ln.split() for ln in f if ln.strip()]
    m = int(lines[0][0])
    if len(lines) - 1 != m:
        raise ValueError(f"{path}: header says {m} points, found {len(lines) - 1}")
    return np.array([[float(v) for v in ln] for ln in lines[1:]]).reshape(m, 3)


def save_target(path, points) -> None:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    with open(path, "w") as f:
        f.write(f"{len(pts)}\n")
        for p in pts:
            f.write(" ".join(repr(float(v)) for v in p) + "\n")


def load_observations(path) -> dict[str, Observations]:
    """Read the observation CSV and split it by camera id."""
    rows: dict[str, list] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != OBSERVATION_HEADER:
            raise ValueError(f"{path}: header must be {','.join(OBSERVATION_HEADER)}")
        for rec in reader:
            if not rec:
                continue
            cam, pose, point, u, v = rec
            rows.setdefault(cam.strip(), []).append((int(pose), int(point), float(u), float(v)))
    out = {}
    for cam, recs in rows.items():
        a = np.array(recs, dtype=float)
        out[cam] = Observations(a[:, 0].astype(int), a[:, 1].astype(int), a[:, 2:4])
    return out


def save_observations(path, per_camera: dict) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(OBSERVATION_HEADER)
        for cam, obs in per_camera.items():
            for i, j, (u, v) in zip(obs.pose, obs.point, obs.uv):
                w.writerow([cam, int(i), int(j), repr(float(u)), repr(float(v))])
