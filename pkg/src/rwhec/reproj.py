"""Reprojection-error solvers rp1 (fixed intrinsics) and rp2 (refined intrinsics).

Both estimate ``X^-1`` and the ``Z_d`` by matching predicted target corners
``f(k_d, [Z_d B_i X^-1]_{3x4} P_j)`` to detections. rp1 starts from the c2
simultaneous solution and rp2 starts from rp1, passing parameter vectors
through unchanged so each stage can only lower the objective.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .axzb import pack_params, solve_c2_simultaneous, unpack_params
from .camera import CameraIntrinsics, project_points
from .errors import ConfigError, ConvergenceFailure, NegativeFocal
from .nlls import SolverOptions, solve_lm
from .problem import CalibProblem, CalibResult, Method
from .se3 import RotationKind, inverse

__all__ = ["ReprojResult", "solve_rp1", "solve_rp2", "compute_rsse", "SENTINEL_PX"]

SENTINEL_PX = 1e6
MAX_RRMSE_PX = 1e4
N_INTRINSICS = 12


@dataclass
class ReprojResult:
    base: CalibResult
    refined_intrinsics: list | None
    rsse: float
    rrmse_per_camera: list

    @property
    def x(self):
        return self.base.x

    @property
    def z(self):
        return self.base.z

    @property
    def report(self):
        return self.base.report


class _Terms:
    """Flattened observation data of one camera over its visible poses."""

    def __init__(self, problem: CalibProblem, d: int, sqrt_w: float):
        cam = problem.cameras[d]
        obs = cam.visible_observations()
        self.pose = obs.pose
        self.points = problem.target[obs.point]
        self.uv = obs.uv
        self.sqrt_w = sqrt_w
        self.count = len(obs)

    def residuals(self, x_tilde, z, b_poses, kvec):
        """Unweighted ``(du, dv)`` per observation and the in-front mask."""
        cams = (z @ b_poses @ x_tilde)[self.pose]
        pc = np.einsum("nij,nj->ni", cams[:, :3, :3], self.points) + cams[:, :3, 3]
        pix, ok = project_points(kvec, pc)
        res = np.where(ok[:, None], self.uv - pix, SENTINEL_PX)
        return res, ok


def _terms(problem: CalibProblem):
    if not problem.has_observations():
        raise ConfigError("reprojection methods need a target model and observations for every camera")
    sw = np.sqrt(problem.weights())
    return [_Terms(problem, d, sw[d]) for d in range(problem.n_cameras)]


def _kvec(k):
    return k.as_vector() if isinstance(k, CameraIntrinsics) else np.asarray(k, dtype=float)


def compute_rsse(x, z_list, k_list, problem: CalibProblem, x_tilde=None):
    """Unweighted reprojection sum of squares and per-camera rrmse (pixels).

    Observations landing behind a camera contribute the sentinel residual and
    raise a :class:`RuntimeWarning`.
    """
    xt = inverse(x) if x_tilde is None else np.asarray(x_tilde)
    total = 0.0
    rrmse = []
    behind = 0
    for d, term in enumerate(_terms(problem)):
        res, ok = term.residuals(xt, z_list[d], problem.b_poses, _kvec(k_list[d]))
        behind += int(np.sum(~ok))
        s = float(np.sum(res * res))
        total += s
        rrmse.append(float(np.sqrt(s / term.count)))
    if behind:
        warnings.warn(f"{behind} observations project behind their camera", RuntimeWarning)
    return total, rrmse


def _seed_params(seed: CalibResult, kind: RotationKind):
    if seed.rotation_kind is kind and seed.method.estimates_inverse_x and seed.params is not None:
        return np.array(seed.params, dtype=float)
    return pack_params(seed.x_tilde, seed.z, kind)


def _solve(problem, kind, params0, ks_fixed, refine, options):
    terms = _terms(problem)
    q = problem.n_cameras
    n_pose_params = (kind.size + 3) * (q + 1)

    def residuals(p):
        xt, zs = unpack_params(p[:n_pose_params], kind, q)
        parts = []
        for d, term in enumerate(terms):
            if refine:
                kv = p[n_pose_params + d * N_INTRINSICS:n_pose_params + (d + 1) * N_INTRINSICS]
            else:
                kv = ks_fixed[d]
            res, _ = term.residuals(xt, zs[d], problem.b_poses, kv)
            parts.append(term.sqrt_w * res.ravel())
        return np.concatenate(parts)

    params, report = solve_lm(residuals, options, x0=params0)
    xt, zs = unpack_params(params[:n_pose_params], kind, q)
    return params, report, xt, zs


def solve_rp1(problem: CalibProblem, rotation_kind="quaternion", options: SolverOptions | None = None,
              seed: CalibResult | None = None) -> ReprojResult:
    """Minimize reprojection error over ``X^-1`` and every ``Z_d`` with intrinsics held fixed.

    Without ``seed`` the c2 simultaneous solution is computed first and used
    as the starting point.
    """
    kind = RotationKind.parse(rotation_kind)
    if not problem.has_intrinsics():
        raise ConfigError("rp1 needs intrinsics for every camera")
    ks = [c.intrinsics.as_vector() for c in problem.cameras]
    if seed is None:
        seed = solve_c2_simultaneous(problem, kind, options)
    params, report, xt, zs = _solve(problem, kind, _seed_params(seed, kind), ks, False, options)
    base = CalibResult(inverse(xt), zs, kind, Method.RP1, report, params, x_tilde=xt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rsse, rrmse = compute_rsse(base.x, zs, ks, problem, x_tilde=xt)
    if max(rrmse) > MAX_RRMSE_PX:
        raise ConvergenceFailure(f"rp1 finished with rrmse {max(rrmse):.6g} px")
    return ReprojResult(base, None, rsse, rrmse)


def solve_rp2(problem: CalibProblem, rotation_kind="quaternion", options: SolverOptions | None = None,
              seed: ReprojResult | None = None) -> ReprojResult:
    """rp1's objective, additionally refining all twelve intrinsics of every camera."""
    kind = RotationKind.parse(rotation_kind)
    if not problem.has_intrinsics():
        raise ConfigError("rp2 needs intrinsics for every camera")
    if seed is None:
        seed = solve_rp1(problem, kind, options)
    start_ks = seed.refined_intrinsics or [c.intrinsics for c in problem.cameras]
    pose_params = _seed_params(seed.base, kind)
    params0 = np.concatenate([pose_params, *[k.as_vector() for k in start_ks]])
    params, report, xt, zs = _solve(problem, kind, params0, None, True, options)
    n_pose = len(pose_params)
    kvecs = [params[n_pose + d * N_INTRINSICS:n_pose + (d + 1) * N_INTRINSICS]
             for d in range(problem.n_cameras)]
    for d, kv in enumerate(kvecs):
        if not (kv[0] > 0 and kv[1] > 0):
            raise NegativeFocal(f"camera {d} refined to fx={kv[0]:.6g}, fy={kv[1]:.6g}")
    refined = [CameraIntrinsics.from_vector(kv) for kv in kvecs]
    base = CalibResult(inverse(xt), zs, kind, Method.RP2, report, params, x_tilde=xt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rsse, rrmse = compute_rsse(base.x, zs, kvecs, problem, x_tilde=xt)
    if max(rrmse) > MAX_RRMSE_PX:
        raise ConvergenceFailure(f"rp2 finished with rrmse {max(rrmse):.6g} px")
    return ReprojResult(base, refined, rsse, rrmse)
