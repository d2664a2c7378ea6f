"""Robot-world hand-eye calibration (``AX = ZB``) by iterative least squares.

Estimates the robot-base->world transform ``X`` and one hand->camera transform
``Z_d`` per camera from paired robot and camera poses, using algebraic costs
(``c1``, ``c2``; simultaneous or separable) or reprojection error (``rp1``,
``rp2``).
"""

from .axzb import (
    evaluate_cost,
    initial_rotations,
    solve_c1_separable,
    solve_c1_simultaneous,
    solve_c2_separable,
    solve_c2_simultaneous,
    solve_class1,
)
from .camera import CameraIntrinsics, Observations, make_chessboard, project, project_points
from .dataset import Dataset, dump_dataset, load_dataset
from .errors import (
    ConfigError,
    ConvergenceFailure,
    DatasetIOError,
    DegenerateMotion,
    DegenerateParameter,
    ExtrinsicsError,
    GeometryError,
    InsufficientViews,
    InvalidStart,
    ManifestError,
    NegativeFocal,
    NonFiniteJacobian,
    PointBehindCamera,
    RwhecError,
)
from .metrics import MetricsReport, e_c, e_r1, e_r2, e_t, evaluate, rae, sim_errors, triangulate_point
from .nlls import SolverOptions, SolverReport, Termination, solve_lm
from .pose import estimate_pose
from .problem import CalibProblem, CalibResult, CameraData, Method
from .reproj import ReprojResult, compute_rsse, solve_rp1, solve_rp2
from .runner import RunConfig, run
from .se3 import RotationKind, RotationParam, inverse, load_htm, make_htm, save_htm
from .simulate import SimConfig, TranslationScale, generate, run_sweep, synth_camera_dataset

__version__ = "0.1.0"

__all__ = [
    "evaluate_cost",
    "initial_rotations",
    "solve_c1_separable",
    "solve_c1_simultaneous",
    "solve_c2_separable",
    "solve_c2_simultaneous",
    "solve_class1",
    "CameraIntrinsics",
    "Observations",
    "make_chessboard",
    "project",
    "project_points",
    "Dataset",
    "dump_dataset",
    "load_dataset",
    "ConfigError",
    "ConvergenceFailure",
    "DatasetIOError",
    "DegenerateMotion",
    "DegenerateParameter",
    "ExtrinsicsError",
    "GeometryError",
    "InsufficientViews",
    "InvalidStart",
    "ManifestError",
    "NegativeFocal",
    "NonFiniteJacobian",
    "PointBehindCamera",
    "RwhecError",
    "MetricsReport",
    "e_c",
    "e_r1",
    "e_r2",
    "e_t",
    "evaluate",
    "rae",
    "sim_errors",
    "triangulate_point",
    "SolverOptions",
    "SolverReport",
    "Termination",
    "solve_lm",
    "estimate_pose",
    "CalibProblem",
    "CalibResult",
    "CameraData",
    "Method",
    "ReprojResult",
    "compute_rsse",
    "solve_rp1",
    "solve_rp2",
    "RunConfig",
    "run",
    "RotationKind",
    "RotationParam",
    "inverse",
    "load_htm",
    "make_htm",
    "save_htm",
    "SimConfig",
    "TranslationScale",
    "generate",
    "run_sweep",
    "synth_camera_dataset",
]
