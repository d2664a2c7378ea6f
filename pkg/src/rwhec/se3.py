"""Rotation parameterizations and 4x4 homogeneous transforms.

Rotations are plain ``(3, 3)`` float arrays and transforms are ``(4, 4)``
arrays with bottom row ``(0, 0, 0, 1)``. Three parameterizations are
supported for optimization:

* Euler angles ``(ax, ay, az)`` in radians, composed as ``Rz @ Ry @ Rx``
  (fixed axes, acting on column vectors).
* Axis-angle vectors whose norm is the rotation angle (Rodrigues).
* Quaternions stored scalar first, ``(w, x, y, z)``. They are normalized on
  every evaluation, so an optimizer may leave the unit sphere freely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParameter

__all__ = [
    "RotationKind",
    "RotationParam",
    "rotation_matrix",
    "rot_from_param",
    "param_from_rot",
    "quat_from_rot",
    "euler_from_rot",
    "axis_angle_from_rot",
    "rotation_angle",
    "make_htm",
    "compose",
    "inverse",
    "is_rotation",
    "format_htm",
    "parse_htm",
    "save_htm",
    "load_htm",
]

_QUAT_MIN_NORM = 1e-12
_GIMBAL_EPS = 1e-12


class RotationKind(enum.Enum):
    EULER_XYZ = "euler"
    AXIS_ANGLE = "axis-angle"
    QUATERNION = "quaternion"

    @property
    def size(self) -> int:
        return 4 if self is RotationKind.QUATERNION else 3

    def identity(self) -> np.ndarray:
        """Parameter vector mapping to the identity rotation."""
        p = np.zeros(self.size)
        if self is RotationKind.QUATERNION:
            p[0] = 1.0
        return p

    @classmethod
    def parse(cls, name) -> "RotationKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"euler-xyz": "euler", "axisangle": "axis-angle", "aa": "axis-angle",
                   "quat": "quaternion", "q": "quaternion"}
        key = aliases.get(key, key)
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown rotation kind {name!r}")


@dataclass(frozen=True)
class RotationParam:
    """A tagged rotation parameter vector.

    ``gimbal_lock`` is set by :func:`param_from_rot` when an Euler extraction
    hit the singular configuration and picked the representative with zero
    z angle.
    """

    kind: RotationKind
    p: np.ndarray
    gimbal_lock: bool = False

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.size != self.kind.size:
            raise ValueError(f"{self.kind.value} parameters need length {self.kind.size}, got {p.size}")
        object.__setattr__(self, "p", p)

    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.kind, self.p)


def _euler_matrix(p):
    ax, ay, az = p
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    # Rz @ Ry @ Rx expanded
    return np.array([
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ])


def _axis_angle_matrix(v):
    v = np.asarray(v, dtype=float)
    th2 = float(v @ v)
    th = np.sqrt(th2)
    if th < 1e-4:
        # series keeps the coefficients accurate under finite differencing
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th2
    x, y, z = v
    w = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + a * w + b * (w @ w)


def _quaternion_matrix(q):
    q = np.asarray(q, dtype=float)
    nrm = np.sqrt(q @ q)
    if not nrm > _QUAT_MIN_NORM:
        raise DegenerateParameter(f"quaternion norm {nrm:g} is too small to normalize")
    w, x, y, z = q / nrm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


_BUILDERS = {
    RotationKind.EULER_XYZ: _euler_matrix,
    RotationKind.AXIS_ANGLE: _axis_angle_matrix,
    RotationKind.QUATERNION: _quaternion_matrix,
}


def rotation_matrix(kind: RotationKind, p) -> np.ndarray:
    """Map a raw parameter vector of the given kind to a rotation matrix."""
    return _BUILDERS[kind](p)


def rot_from_param(param: RotationParam) -> np.ndarray:
    return rotation_matrix(param.kind, param.p)


def quat_from_rot(r) -> np.ndarray:
    """Unit quaternion ``(w, x, y, z)`` with ``w >= 0`` (Shepperd's method)."""
    r = np.asarray(r, dtype=float)
    tr = np.trace(r)
    diag = np.diag(r)
    k = int(np.argmax([tr, *diag]))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = np.array([0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s])
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = np.array([(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s])
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = np.array([(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = np.array([(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q


def euler_from_rot(r) -> tuple[np.ndarray, bool]:
    """Return ``((ax, ay, az), gimbal_lock)`` such that ``r = Rz @ Ry @ Rx``."""
    r = np.asarray(r, dtype=float)
    if abs(r[2, 0]) > 1.0 - _GIMBAL_EPS:
        # ay = +-pi/2 leaves only ax - az (or ax + az) observable; take az = 0
        ay = -np.sign(r[2, 0]) * np.pi / 2
        ax = np.arctan2(-r[1, 2], r[1, 1])
        return np.array([ax, ay, 0.0]), True
    ay = np.arctan2(-r[2, 0], np.hypot(r[0, 0], r[1, 0]))
    ax = np.arctan2(r[2, 1], r[2, 2])
    az = np.arctan2(r[1, 0], r[0, 0])
    return np.array([ax, ay, az]), False


def axis_angle_from_rot(r) -> np.ndarray:
    """Rotation vector with angle in ``[0, pi]``."""
    q = quat_from_rot(r)
    s = np.linalg.norm(q[1:])
    if s < 1e-300:
        return np.zeros(3)
    th = 2.0 * np.arctan2(s, q[0])
    return q[1:] / s * th


def param_from_rot(r, kind) -> RotationParam:
    kind = RotationKind.parse(kind)
    if kind is RotationKind.EULER_XYZ:
        p, locked = euler_from_rot(r)
        return RotationParam(kind, p, gimbal_lock=locked)
    if kind is RotationKind.AXIS_ANGLE:
        return RotationParam(kind, axis_angle_from_rot(r))
    return RotationParam(kind, quat_from_rot(r))


def rotation_angle(r) -> float:
    """Angle of a rotation in radians, in ``[0, pi]``.

    Uses ``atan2(sin, cos)`` so tiny angles keep full relative precision.
    """
    r = np.asarray(r, dtype=float)
    c = (np.trace(r) - 1.0) / 2.0
    s = 0.5 * np.linalg.norm([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return float(np.arctan2(s, c))


def make_htm(r=None, t=None) -> np.ndarray:
    h = np.eye(4)
    if r is not None:
        h[:3, :3] = r
    if t is not None:
        h[:3, 3] = t
    return h


def compose(a, b) -> np.ndarray:
    return np.asarray(a) @ np.asarray(b)


def inverse(a) -> np.ndarray:
    """Closed-form inverse of a rigid transform."""
    a = np.asarray(a, dtype=float)
    out = np.eye(4)
    rt = a[:3, :3].T
    out[:3, :3] = rt
    out[:3, 3] = -rt @ a[:3, 3]
    return out


def is_rotation(m, tol=1e-9) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    ortho = np.linalg.norm(m.T @ m - np.eye(3)) < tol
    return bool(ortho and abs(np.linalg.det(m) - 1.0) <= tol)


# ---------------------------------------------------------------------------
# text format: four rows of four numbers, last row "0 0 0 1"

def _fmt(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def format_htm(h) -> str:
    h = np.asarray(h, dtype=float)
    rows = [" ".join(_fmt(v) for v in h[i]) for i in range(3)]
    rows.append("0 0 0 1")
    return "\n".join(rows) + "\n"


def parse_htm(text: str) -> np.ndarray:
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if len(rows) != 4 or any(len(r) != 4 for r in rows):
        raise ValueError("transform text must have 4 rows of 4 numbers")
    h = np.array([[float(v) for v in r] for r in rows])
    if not np.array_equal(h[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError("last transform row must be 0 0 0 1")
    return h


def save_htm(path, h) -> None:
    with open(path, "w") as f:
        f.write(format_htm(h))


def load_htm(path) -> np.ndarray:
    with open(path) as f:
        return parse_htm(f.read())
