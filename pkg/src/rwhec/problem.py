"""Calibration problem and result containers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraIntrinsics, Observations, check_target
from .nlls import SolverReport
from .se3 import RotationKind, inverse

__all__ = ["Method", "CameraData", "CalibProblem", "CalibResult"]


class Method(enum.Enum):
    C1_SIM = "c1-sim"
    C1_SEP = "c1-sep"
    C2_SIM = "c2-sim"
    C2_SEP = "c2-sep"
    RP1 = "rp1"
    RP2 = "rp2"

    @classmethod
    def parse(cls, name) -> "Method":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown method {name!r}")

    @property
    def is_reprojection(self) -> bool:
        return self in (Method.RP1, Method.RP2)

    @property
    def estimates_inverse_x(self) -> bool:
        """True when the solver parameterizes ``X^-1`` rather than ``X``."""
        return self not in (Method.C1_SIM, Method.C1_SEP)


@dataclass
class CameraData:
    """Everything known about one camera on the hand.

    ``a_poses`` maps a robot pose index to the world->camera transform at that
    pose. ``visibility`` lists the pose indices where this camera saw the
    target; by default it is inferred from ``a_poses`` or ``observations``.
    """

    a_poses: dict = field(default_factory=dict)
    intrinsics: CameraIntrinsics | None = None
    observations: Observations | None = None
    visibility: tuple = ()
    name: str = "0"

    def __post_init__(self):
        self.a_poses = {int(i): np.asarray(a, dtype=float) for i, a in self.a_poses.items()}
        if not self.visibility:
            if self.a_poses:
                vis = self.a_poses.keys()
            elif self.observations is not None:
                vis = np.unique(self.observations.pose).tolist()
            else:
                vis = ()
            self.visibility = tuple(sorted(int(i) for i in vis))
        else:
            self.visibility = tuple(sorted(int(i) for i in self.visibility))

    def visible_observations(self) -> Observations:
        return self.observations.for_poses(self.visibility)


@dataclass
class CalibProblem:
    b_poses: np.ndarray
    cameras: list
    target: np.ndarray | None = None

    def __post_init__(self):
        self.b_poses = np.asarray(self.b_poses, dtype=float).reshape(-1, 4, 4)
        if isinstance(self.cameras, CameraData):
            self.cameras = [self.cameras]
        n = self.n_poses
        if n < 3:
            raise ValueError("a calibration problem needs at least 3 robot poses")
        if not self.cameras:
            raise ValueError("a calibration problem needs at least one camera")
        for d, cam in enumerate(self.cameras):
            if any(i < 0 or i >= n for i in cam.visibility):
                raise ValueError(f"camera {d} visibility refers to a pose outside [0, {n})")
            if len(cam.visibility) < 3:
                raise ValueError(f"camera {d} sees the target in fewer than 3 poses")
        if self.target is not None:
            self.target = check_target(self.target)

    @classmethod
    def single(cls, a_poses, b_poses, **kw) -> "CalibProblem":
        """Single-camera problem from aligned lists of A and B transforms."""
        cam = CameraData(a_poses=dict(enumerate(a_poses)), **{k: kw.pop(k) for k in
                                                              ("intrinsics", "observations") if k in kw})
        return cls(b_poses=b_poses, cameras=[cam], **kw)

    @property
    def n_poses(self) -> int:
        return len(self.b_poses)

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    def weights(self) -> np.ndarray:
        """Per-camera weights ``min_s / |S_d|`` giving each camera equal influence."""
        sizes = np.array([len(c.visibility) for c in self.cameras], dtype=float)
        return sizes.min() / sizes

    def has_a_poses(self) -> bool:
        return all(all(i in c.a_poses for i in c.visibility) for c in self.cameras)

    def has_observations(self) -> bool:
        return self.target is not None and all(c.observations is not None for c in self.cameras)

    def has_intrinsics(self) -> bool:
        return all(c.intrinsics is not None for c in self.cameras)


@dataclass
class CalibResult:
    """Estimated ``X`` (robot base -> world) and one ``Z`` (hand -> camera) per camera.

    ``params`` is the solver's final parameter vector. For methods that
    estimate ``X^-1`` its leading block parameterizes ``X^-1``; this is what
    lets the reprojection solvers warm-start bit-for-bit from a c2 result.
    """

    x: np.ndarray
    z: list
    rotation_kind: RotationKind
    method: Method
    report: SolverReport | None = None
    params: np.ndarray | None = None
    x_tilde: np.ndarray | None = None

    def __post_init__(self):
        if self.x_tilde is None:
            self.x_tilde = inverse(self.x)
