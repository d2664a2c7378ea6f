"""Algebraic ``AX = ZB`` solvers (cost functions c1 and c2).

All solvers accept one or more cameras. Camera ``d`` contributes only the
poses in its visibility set, with every residual scaled by ``sqrt(w_d)`` so
that the squared objective carries the camera weight ``w_d``.

Parameter vectors are laid out as ``[p_X, t_X, p_Z0, t_Z0, p_Z1, t_Z1, ...]``
where the leading block describes ``X`` for c1 and ``X^-1`` for c2.
"""

from __future__ import annotations

import enum
import itertools
import logging

import numpy as np

from .errors import ConvergenceFailure, DegenerateMotion
from .nlls import SolverOptions, SolverReport, Termination, solve_lm
from .problem import CalibProblem, CalibResult, Method
from .se3 import RotationKind, inverse, make_htm, param_from_rot, rotation_matrix

__all__ = [
    "CostKind",
    "pack_params",
    "unpack_params",
    "solve_c1_simultaneous",
    "solve_c1_separable",
    "solve_c2_simultaneous",
    "solve_c2_separable",
    "evaluate_cost",
    "initial_rotations",
    "solve_class1",
]

log = logging.getLogger(__name__)

RANK_TOL = 1e-8
FAILURE_COST_PER_POSE = 1e6
GRID_SWEEPS = 10


class CostKind(enum.Enum):
    C1 = "c1"
    C2 = "c2"


def _block(kind: RotationKind) -> int:
    return kind.size + 3


def pack_params(lead, zs, kind: RotationKind) -> np.ndarray:
    out = []
    for h in [lead, *zs]:
        out.append(param_from_rot(h[:3, :3], kind).p)
        out.append(h[:3, 3])
    return np.concatenate(out)


def unpack_params(params, kind: RotationKind, q: int):
    """Return ``(lead, [Z_0, ..., Z_{q-1}])`` as 4x4 transforms."""
    b = _block(kind)
    s = kind.size
    mats = []
    for d in range(q + 1):
        blk = params[d * b:(d + 1) * b]
        mats.append(make_htm(rotation_matrix(kind, blk[:s]), blk[s:]))
    return mats[0], mats[1:]


def _identity_params(kind: RotationKind, q: int) -> np.ndarray:
    return np.concatenate([np.concatenate([kind.identity(), np.zeros(3)]) for _ in range(q + 1)])


def _camera_stacks(problem: CalibProblem):
    """Per camera: (A stack, B stack, sqrt weight) over its visible poses."""
    w = problem.weights()
    out = []
    for d, cam in enumerate(problem.cameras):
        idx = list(cam.visibility)
        a = np.stack([cam.a_poses[i] for i in idx])
        b = problem.b_poses[idx]
        out.append((a, b, np.sqrt(w[d])))
    return out


def _octahedral_rotations():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            m = np.zeros((3, 3))
            m[range(3), perm] = signs
            if np.linalg.det(m) > 0:
                mats.append(m)
    return mats


_GRID = _octahedral_rotations()


def _procrustes(m):
    """Rotation maximizing ``trace(R^T m)``."""
    u, _, vt = np.linalg.svd(m)
    fix = np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt)) or 1.0])
    return u @ fix @ vt


def _rotation_cost(stacks, lead_r, z_rs, cost: CostKind):
    total = 0.0
    for (a, b, sw), rz in zip(stacks, z_rs):
        ra, rb = a[:, :3, :3], b[:, :3, :3]
        diff = ra @ lead_r - rz @ rb if cost is CostKind.C1 else ra - rz @ rb @ lead_r
        total += sw * sw * float(np.sum(diff ** 2))
    return total


def _best_z(stacks, lead_r, cost: CostKind):
    out = []
    for a, b, _ in stacks:
        ra, rb = a[:, :3, :3], b[:, :3, :3]
        if cost is CostKind.C1:
            m = np.einsum("nij,jk,nlk->il", ra, lead_r, rb)
        else:
            m = np.einsum("nij,nkj->ik", ra, rb @ lead_r)
        out.append(_procrustes(m))
    return out


def _best_lead(stacks, z_rs, cost: CostKind):
    m = np.zeros((3, 3))
    for (a, b, sw), rz in zip(stacks, z_rs):
        ra, rb = a[:, :3, :3], b[:, :3, :3]
        if cost is CostKind.C1:
            m += sw * sw * np.einsum("nji,jk,nkl->il", ra, rz, rb)
        else:
            m += sw * sw * np.einsum("nkj,kl,nli->ji", rb, rz.T, ra)
    return _procrustes(m)


def initial_rotations(problem: CalibProblem, cost: CostKind, init="grid", sweeps=GRID_SWEEPS):
    """Starting rotations ``(lead, [Z_d])`` for the class-1 solvers.

    ``"identity"`` starts every rotation at I. ``"grid"`` starts the lead
    rotation at each of the 24 rotations of the cube group, refines every
    start by a few alternating closed-form (Procrustes) updates of ``Z_d``
    and the lead rotation, and keeps the cheapest result. The algebraic
    rotation cost has a spurious minimum where both unknowns are off by
    half-turns, and an identity start falls into it for many pose sets.
    """
    q = problem.n_cameras
    if init == "identity":
        return np.eye(3), [np.eye(3)] * q
    if init != "grid":
        raise ValueError(f"unknown init {init!r}")
    stacks = _camera_stacks(problem)
    best = (_rotation_cost(stacks, np.eye(3), [np.eye(3)] * q, cost), np.eye(3), [np.eye(3)] * q)
    for g in _GRID:
        lead = g
        z_rs = _best_z(stacks, lead, cost)
        for _ in range(sweeps):
            lead = _best_lead(stacks, z_rs, cost)
            z_rs = _best_z(stacks, lead, cost)
        c = _rotation_cost(stacks, lead, z_rs, cost)
        if c < best[0]:
            best = (c, lead, z_rs)
    return best[1], best[2]


def _check(problem, report: SolverReport, method):
    if report.termination is Termination.STALLED and report.final_cost > FAILURE_COST_PER_POSE * problem.n_poses:
        raise ConvergenceFailure(f"{method.value} stalled at cost {report.final_cost:.6g}")


def _simultaneous(problem: CalibProblem, kind, cost: CostKind, options, init):
    kind = RotationKind.parse(kind)
    stacks = _camera_stacks(problem)
    q = problem.n_cameras
    if init == "identity":
        x0 = _identity_params(kind, q)
    else:
        lead_r, z_rs = initial_rotations(problem, cost, init)
        try:
            t = _solve_translations(*_translation_design(problem, lead_r, z_rs, cost))
        except DegenerateMotion:
            t = np.zeros(3 * (q + 1))
        x0 = pack_params(make_htm(lead_r, t[:3]),
                         [make_htm(z_rs[d], t[3 * (d + 1):3 * (d + 2)]) for d in range(q)], kind)

    def residuals(p):
        lead, zs = unpack_params(p, kind, q)
        parts = []
        for (a, b, sw), z in zip(stacks, zs):
            if cost is CostKind.C1:
                diff = a @ lead - z @ b
            else:
                diff = a - z @ b @ lead
            parts.append(sw * diff[:, :3, :].ravel())
        return np.concatenate(parts)

    params, report = solve_lm(residuals, options, x0=x0)
    lead, zs = unpack_params(params, kind, q)
    method = Method.C1_SIM if cost is CostKind.C1 else Method.C2_SIM
    _check(problem, report, method)
    if cost is CostKind.C1:
        return CalibResult(lead, zs, kind, method, report, params)
    return CalibResult(inverse(lead), zs, kind, method, report, params, x_tilde=lead)


def solve_c1_simultaneous(problem: CalibProblem, rotation_kind="quaternion",
                          options: SolverOptions | None = None, init="grid") -> CalibResult:
    """Minimize ``sum_d sum_i w_d ||A_id X - Z_d B_i||_F^2`` jointly over rotation and translation.

    ``init`` selects the starting point, see :func:`initial_rotations`. With
    ``"identity"`` translations start at zero; with ``"grid"`` they start at
    the exact least-squares translations for the starting rotations.
    """
    return _simultaneous(problem, rotation_kind, CostKind.C1, options, init)


def solve_c2_simultaneous(problem: CalibProblem, rotation_kind="quaternion",
                          options: SolverOptions | None = None, init="grid") -> CalibResult:
    """Minimize ``sum_d sum_i w_d ||A_id - Z_d B_i X^-1||_F^2``, parameterizing ``X^-1`` directly."""
    return _simultaneous(problem, rotation_kind, CostKind.C2, options, init)


def _rotation_stage(problem, kind, cost: CostKind, options, init="grid"):
    stacks = _camera_stacks(problem)
    q = problem.n_cameras
    s = kind.size

    def rots(p):
        lead = rotation_matrix(kind, p[:s])
        return lead, [rotation_matrix(kind, p[(d + 1) * s:(d + 2) * s]) for d in range(q)]

    def residuals(p):
        lead, zs = rots(p)
        parts = []
        for (a, b, sw), rz in zip(stacks, zs):
            ra, rb = a[:, :3, :3], b[:, :3, :3]
            if cost is CostKind.C1:
                diff = ra @ lead - rz @ rb
            else:
                diff = ra - rz @ rb @ lead
            parts.append(sw * diff.ravel())
        return np.concatenate(parts)

    lead0, z0 = initial_rotations(problem, cost, init)
    x0 = np.concatenate([param_from_rot(r, kind).p for r in [lead0, *z0]])
    p, report = solve_lm(residuals, options, x0=x0)
    lead, zs = rots(p)
    return p, lead, zs, report


def _translation_design(problem, lead_r, z_rs, cost: CostKind):
    """Stack the linear translation system ``M @ [t_lead, t_Z0, ...] = y``."""
    stacks = _camera_stacks(problem)
    q = problem.n_cameras
    rows, rhs = [], []
    for d, ((a, b, sw), rz) in enumerate(zip(stacks, z_rs)):
        for ai, bi in zip(a, b):
            blk = np.zeros((3, 3 * (q + 1)))
            if cost is CostKind.C1:
                # R_A t_X - t_Z = R_Z t_B - t_A
                blk[:, :3] = ai[:3, :3]
                blk[:, 3 * (d + 1):3 * (d + 2)] = -np.eye(3)
                y = rz @ bi[:3, 3] - ai[:3, 3]
            else:
                # R_Z R_B t~X + t_Z = t_A - R_Z t_B
                blk[:, :3] = rz @ bi[:3, :3]
                blk[:, 3 * (d + 1):3 * (d + 2)] = np.eye(3)
                y = ai[:3, 3] - rz @ bi[:3, 3]
            rows.append(sw * blk)
            rhs.append(sw * y)
    return np.vstack(rows), np.concatenate(rhs)


def _solve_translations(m, y):
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] < RANK_TOL * sv[0]:
        rank = int(np.sum(sv >= RANK_TOL * sv[0]))
        raise DegenerateMotion(f"translation system has rank {rank} < {m.shape[1]}; "
                               "robot poses need more rotational diversity")
    qm, rm = np.linalg.qr(m)
    return np.linalg.solve(rm, qm.T @ y)


def _separable(problem: CalibProblem, kind, cost: CostKind, options, init):
    kind = RotationKind.parse(kind)
    q = problem.n_cameras
    p_rot, lead_r, z_rs, report = _rotation_stage(problem, kind, cost, options, init)
    m, y = _translation_design(problem, lead_r, z_rs, cost)
    t = _solve_translations(m, y)
    lead = make_htm(lead_r, t[:3])
    zs = [make_htm(z_rs[d], t[3 * (d + 1):3 * (d + 2)]) for d in range(q)]
    s = kind.size
    params = np.concatenate([np.concatenate([p_rot[d * s:(d + 1) * s], t[3 * d:3 * (d + 1)]])
                             for d in range(q + 1)])
    method = Method.C1_SEP if cost is CostKind.C1 else Method.C2_SEP
    _check(problem, report, method)
    if cost is CostKind.C1:
        return CalibResult(lead, zs, kind, method, report, params)
    return CalibResult(inverse(lead), zs, kind, method, report, params, x_tilde=lead)


def solve_c1_separable(problem: CalibProblem, rotation_kind="quaternion",
                       options: SolverOptions | None = None, init="grid") -> CalibResult:
    """Rotations by LM on ``||R_A R_X - R_Z R_B||``, then translations by linear least squares.

    ``report`` describes the rotation stage.
    """
    return _separable(problem, rotation_kind, CostKind.C1, options, init)


def solve_c2_separable(problem: CalibProblem, rotation_kind="quaternion",
                       options: SolverOptions | None = None, init="grid") -> CalibResult:
    return _separable(problem, rotation_kind, CostKind.C2, options, init)


def evaluate_cost(result: CalibResult, problem: CalibProblem, which="c1") -> float:
    """Weighted c1 or c2 objective at the result's ``X`` and ``Z``."""
    which = which if isinstance(which, CostKind) else CostKind(str(which).lower())
    total = 0.0
    for (a, b, sw), z in zip(_camera_stacks(problem), result.z):
        if which is CostKind.C1:
            diff = a @ result.x - z @ b
        else:
            diff = a - z @ b @ result.x_tilde
        total += sw * sw * float(np.sum(diff[:, :3, :] ** 2))
    return total


_CLASS1 = {
    Method.C1_SIM: solve_c1_simultaneous,
    Method.C1_SEP: solve_c1_separable,
    Method.C2_SIM: solve_c2_simultaneous,
    Method.C2_SEP: solve_c2_separable,
}


def solve_class1(method, problem, rotation_kind, options=None, init="grid") -> CalibResult:
    return _CLASS1[Method.parse(method)](problem, rotation_kind, options, init)
