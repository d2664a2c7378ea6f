"""Synthetic ground-truth datasets and noise sweeps.

Simulated datasets follow the usual protocol: random rotations and uniform
translations for ``A_i``, ``X`` and ``Z``, then ``B_i = Z^-1 A_i X`` with
quaternion noise of magnitude ``eta`` on the rotation of every ``B_i``.

Randomness comes from numpy's PCG64 generator seeded by ``(seed, trial)``,
so trials are independent streams and reproducible in any order. Within one
trial, every noise level reuses the same stream; curves across ``eta`` then
differ only by the noise magnitude.
"""

from __future__ import annotations

import csv
import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .camera import CameraIntrinsics, Observations, make_chessboard, project_points
from .errors import GeometryError, RwhecError
from .problem import CalibProblem, CameraData, Method
from .se3 import RotationKind, inverse, make_htm, quat_from_rot, rotation_matrix

__all__ = [
    "TranslationScale",
    "SimConfig",
    "SimDataset",
    "random_rotation",
    "add_quaternion_noise",
    "generate",
    "eta_grid",
    "SweepRow",
    "SweepReport",
    "run_sweep",
    "SynthCameraDataset",
    "synth_camera_dataset",
    "default_intrinsics",
    "SWEEP_HEADER",
]

N_ETA = 19
ETA_MAX = 0.25
SWEEP_HEADER = ["solver", "rotation", "eta", "trial", "e_RX", "e_RZ", "e_tX", "e_tZ", "time_s"]


class TranslationScale(enum.Enum):
    UNIT = "unit"
    MILLIMETER = "mm"

    @property
    def upper(self) -> float:
        return 1.0 if self is TranslationScale.UNIT else 1000.0


@dataclass(frozen=True)
class SimConfig:
    n_poses: int = 25
    translation_scale: TranslationScale = TranslationScale.UNIT
    eta: float = 0.0
    seed: int = 0
    trials: int = 10

    def __post_init__(self):
        if not 0.0 <= self.eta <= ETA_MAX:
            raise ValueError(f"eta must lie in [0, {ETA_MAX}]")
        if self.n_poses < 3:
            raise ValueError("n_poses must be at least 3")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "translation_scale", TranslationScale(self.translation_scale))


@dataclass
class SimDataset:
    a_poses: np.ndarray
    b_poses: np.ndarray
    truth_x: np.ndarray
    truth_z: np.ndarray
    config: SimConfig

    def problem(self) -> CalibProblem:
        return CalibProblem.single(list(self.a_poses), self.b_poses)


def _rng(seed, trial=0):
    return np.random.Generator(np.random.PCG64([int(seed), int(trial)]))


def random_rotation(rng) -> np.ndarray:
    """Haar-uniform rotation from a normalized Gaussian quaternion."""
    q = rng.standard_normal(4)
    while np.linalg.norm(q) < 1e-9:
        q = rng.standard_normal(4)
    return rotation_matrix(RotationKind.QUATERNION, q)


def add_quaternion_noise(r, eta, rng) -> np.ndarray:
    """Perturb each quaternion component by ``Uniform(-eta, eta)`` and renormalize."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    q = quat_from_rot(r)
    while True:
        qn = q + rng.uniform(-eta, eta, size=4)
        if np.linalg.norm(qn) >= 1e-9:
            return rotation_matrix(RotationKind.QUATERNION, qn)


def _random_htm(rng, upper):
    return make_htm(random_rotation(rng), rng.uniform(0.0, upper, size=3))


def generate(config: SimConfig, trial: int = 0) -> SimDataset:
    rng = _rng(config.seed, trial)
    upper = config.translation_scale.upper
    x = _random_htm(rng, upper)
    z = _random_htm(rng, upper)
    a = np.stack([_random_htm(rng, upper) for _ in range(config.n_poses)])
    z_inv = inverse(z)
    b = z_inv @ a @ x
    if config.eta > 0:
        for i in range(config.n_poses):
            b[i, :3, :3] = add_quaternion_noise(b[i, :3, :3], config.eta, rng)
    return SimDataset(a, b, x, z, config)


def eta_grid() -> np.ndarray:
    """The 19 evenly spaced noise levels on (0, 0.25], endpoint included."""
    return ETA_MAX * np.arange(1, N_ETA + 1) / N_ETA


@dataclass
class SweepRow:
    solver: str
    rotation: str
    eta: float
    trial: int
    e_rx: float
    e_rz: float
    e_tx: float
    e_tz: float
    time_s: float
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)

    def mean_curves(self) -> dict:
        """``{(solver, rotation): {"eta": ..., "e_RX": ..., ...}}`` averaged over successful trials."""
        out = {}
        keys = sorted({(r.solver, r.rotation) for r in self.rows})
        etas = sorted({r.eta for r in self.rows})
        for key in keys:
            curves = {"eta": [], "e_RX": [], "e_RZ": [], "e_tX": [], "e_tZ": []}
            for eta in etas:
                cell = [r for r in self.rows if (r.solver, r.rotation) == key and r.eta == eta and not r.failed]
                curves["eta"].append(eta)
                for name, attr in (("e_RX", "e_rx"), ("e_RZ", "e_rz"), ("e_tX", "e_tx"), ("e_tZ", "e_tz")):
                    curves[name].append(np.mean([getattr(r, attr) for r in cell]) if cell else np.nan)
            out[key] = {k: np.asarray(v) for k, v in curves.items()}
        return out

    def write_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        f = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for r in self.rows:
                vals = ["nan"] * 4 if r.failed else [repr(float(v)) for v in (r.e_rx, r.e_rz, r.e_tx, r.e_tz)]
                w.writerow([r.solver, r.rotation, repr(float(r.eta)), r.trial, *vals, f"{r.time_s:.6f}"])
        finally:
            if own:
                f.close()


def run_sweep(config_base: SimConfig, solvers, rotations=None, etas=None, options=None,
              parallel=False) -> SweepReport:
    """Run every (eta, trial, solver, rotation) cell and collect simulation errors.

    ``solvers`` names class-1 methods (``"c1-sim"`` etc.); failures are
    recorded in the row instead of aborting the sweep. ``parallel`` spreads
    (eta, trial) cells over threads; row order matches the sequential run.
    """
    from .axzb import solve_class1
    from .metrics import sim_errors

    methods = [Method.parse(s) for s in solvers]
    if not methods:
        raise ValueError("run_sweep needs at least one solver")
    bad = [m.value for m in methods if m.is_reprojection]
    if bad:
        raise ValueError(f"simulated datasets carry no images; cannot run {', '.join(bad)}")
    kinds = [RotationKind.parse(k) for k in (rotations or list(RotationKind))]
    etas = eta_grid() if etas is None else np.asarray(etas, dtype=float)

    def cell(eta, trial):
        cfg = replace(config_base, eta=float(eta))
        ds = generate(cfg, trial)
        problem = ds.problem()
        rows = []
        for m in methods:
            for kind in kinds:
                t0 = time.perf_counter()
                try:
                    res = solve_class1(m, problem, kind, options)
                    err = sim_errors(res.x, res.z[0], ds.truth_x, ds.truth_z)
                    rows.append(SweepRow(m.value, kind.value, float(eta), trial, *err,
                                         time.perf_counter() - t0))
                except RwhecError as exc:
                    rows.append(SweepRow(m.value, kind.value, float(eta), trial,
                                         np.nan, np.nan, np.nan, np.nan,
                                         time.perf_counter() - t0, error=str(exc)))
        return rows

    cells = [(eta, trial) for eta in etas for trial in range(config_base.trials)]
    if parallel:
        with ThreadPoolExecutor() as pool:
            chunks = list(pool.map(lambda c: cell(*c), cells))
    else:
        chunks = [cell(*c) for c in cells]
    return SweepReport([row for chunk in chunks for row in chunk])


# ---------------------------------------------------------------------------
# synthetic camera pipeline

def default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(800.0, 790.0, 320.0, 240.0,
                            [-0.12, 0.08, 0.0008, -0.0005, 0.0, 0.0, 0.0, 0.0])


@dataclass
class SynthCameraDataset:
    problem: CalibProblem
    truth_x: np.ndarray
    truth_z: list
    intrinsics: list


def _look_at(center, target, roll):
    fwd = target - center
    fwd /= np.linalg.norm(fwd)
    helper = np.array([1.0, 0.0, 0.0]) if abs(fwd[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    right = np.cross(fwd, helper)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    c, s = np.cos(roll), np.sin(roll)
    r_rows = np.stack([c * right + s * down, -s * right + c * down, fwd])
    return make_htm(r_rows, -r_rows @ center)


def _in_view(k: CameraIntrinsics, a, target, margin):
    pts = target @ a[:3, :3].T + a[:3, 3]
    uv, ok = project_points(k, pts)
    if not np.all(ok) or np.any(pts[:, 2] < 10.0):
        return False
    w, h = k.image_size
    return bool(np.all((uv[:, 0] > margin) & (uv[:, 0] < w - margin)
                       & (uv[:, 1] > margin) & (uv[:, 1] < h - margin)))


def synth_camera_dataset(n_poses=25, target=None, k=None, truth_x=None, truth_z=None,
                         pixel_noise_sigma=0.0, seed=0, distance=(180.0, 320.0),
                         max_tilt_deg=40.0, margin=5.0) -> SynthCameraDataset:
    """Robot poses, camera poses and noisy corner detections with known ``X`` and ``Z``.

    Camera 0 views are drawn around the target centre (tilt up to
    ``max_tilt_deg``, free roll) with every corner inside the image; robot
    poses follow as ``B_i = Z_0^-1 A_i X``. Further cameras (pass lists for
    ``k`` and ``truth_z``) keep the poses where they also see all corners.

    ``pixel_noise_sigma`` is the RMS length of the 2D pixel perturbation, so
    each image coordinate receives ``N(0, sigma / sqrt(2))``.
    """
    rng = _rng(seed, 0)
    target = make_chessboard(6, 8, 10.0) if target is None else np.asarray(target, dtype=float)
    ks = [default_intrinsics()] if k is None else (list(k) if isinstance(k, (list, tuple)) else [k])
    if truth_x is None:
        truth_x = make_htm(random_rotation(rng), rng.uniform(-500.0, 500.0, size=3))
    if truth_z is None:
        truth_z = [make_htm(rotation_matrix(RotationKind.AXIS_ANGLE, rng.uniform(-0.3, 0.3, size=3)),
                            rng.uniform(-60.0, 60.0, size=3))]
        for _ in ks[1:]:
            offset = make_htm(rotation_matrix(RotationKind.AXIS_ANGLE, rng.uniform(-0.05, 0.05, size=3)),
                              rng.uniform(-40.0, 40.0, size=3))
            truth_z.append(offset @ truth_z[0])
    zs = list(truth_z) if isinstance(truth_z, (list, tuple)) else [truth_z]
    if len(zs) != len(ks):
        raise ValueError("need one hand->camera transform per camera")

    centre = target.mean(axis=0)
    normal = np.linalg.svd(target - centre)[2][2]
    if normal[2] < 0:
        normal = -normal
    basis = np.linalg.svd(normal[None])[2][1:]
    a0_list = []
    for i in range(n_poses):
        for _ in range(1000):
            tilt = np.deg2rad(max_tilt_deg) * np.sqrt(rng.uniform())
            az = rng.uniform(0, 2 * np.pi)
            direction = np.cos(tilt) * normal + np.sin(tilt) * (np.cos(az) * basis[0] + np.sin(az) * basis[1])
            aim = centre + rng.uniform(-10, 10, size=3) * np.array([1, 1, 0])
            a0 = _look_at(aim + rng.uniform(*distance) * direction, aim, rng.uniform(0, 2 * np.pi))
            if _in_view(ks[0], a0, target, margin):
                break
        else:
            raise GeometryError(f"could not place camera 0 for pose {i} after 1000 attempts")
        a0_list.append(a0)

    x_inv = inverse(truth_x)
    b_poses = np.stack([inverse(zs[0]) @ a0 @ truth_x for a0 in a0_list])
    cameras = []
    m = len(target)
    for d, (kd, zd) in enumerate(zip(ks, zs)):
        a_poses, pose_idx, point_idx, uv = {}, [], [], []
        for i, b in enumerate(b_poses):
            a = zd @ b @ x_inv
            if not _in_view(kd, a, target, margin):
                continue
            a_poses[i] = a
            pix, _ = project_points(kd, target @ a[:3, :3].T + a[:3, 3])
            pose_idx.append(np.full(m, i))
            point_idx.append(np.arange(m))
            uv.append(pix)
        if len(a_poses) < 3:
            raise GeometryError(f"camera {d} sees the target in fewer than 3 poses")
        uv = np.concatenate(uv)
        if pixel_noise_sigma > 0:
            uv = uv + rng.normal(0.0, pixel_noise_sigma / np.sqrt(2.0), size=uv.shape)
        obs = Observations(np.concatenate(pose_idx), np.concatenate(point_idx), uv)
        cameras.append(CameraData(a_poses=a_poses, intrinsics=kd, observations=obs, name=str(d)))
    problem = CalibProblem(b_poses=b_poses, cameras=cameras, target=target)
    return SynthCameraDataset(problem, truth_x, zs, ks)
