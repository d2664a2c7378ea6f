"""Exception hierarchy shared by every rwhec module."""


class RwhecError(Exception):
    """Base class for all calibration toolkit errors."""


class DegenerateParameter(RwhecError, ValueError):
    """A rotation parameter vector cannot be mapped to a rotation."""


class PointBehindCamera(RwhecError, ValueError):
    """A point lies on or behind the camera's image plane."""


class InvalidStart(RwhecError, ValueError):
    """The residual function is not finite at the initial parameters."""


class NonFiniteJacobian(RwhecError, ArithmeticError):
    """Neither forward nor backward differences produced a finite column."""


class ConvergenceFailure(RwhecError):
    """A solver stopped far away from any acceptable minimum."""


class DegenerateMotion(RwhecError):
    """The robot motions do not determine the translation unknowns."""


class NegativeFocal(RwhecError):
    """Intrinsic refinement drove a focal length to a non-positive value."""


class InsufficientViews(RwhecError, ValueError):
    """Too few observations to triangulate a point."""


class GeometryError(RwhecError):
    """Synthetic pose sampling could not satisfy the visibility constraints."""


class ManifestError(RwhecError, ValueError):
    """A dataset manifest is malformed or inconsistent."""


class DatasetIOError(RwhecError, OSError):
    """A file referenced by a dataset could not be read."""


class ExtrinsicsError(RwhecError):
    """Single-view pose estimation failed for a (camera, pose) pair."""

    def __init__(self, camera, pose, reason=""):
        self.camera = camera
        self.pose = pose
        msg = f"pose estimation failed for camera {camera}, pose {pose}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class ConfigError(RwhecError, ValueError):
    """A run configuration asks for something the dataset cannot support."""
