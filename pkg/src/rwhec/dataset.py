"""Dataset manifests: a directory of plain-text files described by ``key = value`` lines.

Example manifest::

    n_poses = 25
    b_pose_pattern = B_{:04d}.txt
    target_file = target.txt
    units = mm
    camera.0.intrinsics_file = intrinsics.txt
    camera.0.a_pose_pattern = A_{:04d}.txt
    camera.0.observations_file = observations.csv
    camera.0.visibility = 0,1,2,5
    truth_x_file = truth_X.txt
    camera.0.truth_z_file = truth_Z.txt

Paths are relative to the manifest's directory. Pose patterns are Python
format strings taking the pose index. A camera without an A pattern but with
intrinsics and observations gets its A_i from single-view pose estimation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import (
    load_intrinsics,
    load_observations,
    load_target,
    save_intrinsics,
    save_observations,
    save_target,
)
from .errors import DatasetIOError, ManifestError
from .pose import estimate_pose
from .problem import CalibProblem, CameraData
from .se3 import load_htm, save_htm

__all__ = [
    "CameraEntry",
    "DatasetManifest",
    "Dataset",
    "read_manifest",
    "load_dataset",
    "dump_dataset",
]

_CAMERA_KEYS = {"intrinsics_file", "a_pose_pattern", "observations_file", "visibility", "truth_z_file"}
_TOP_KEYS = {"n_poses", "b_pose_pattern", "target_file", "units", "truth_x_file"}


@dataclass
class CameraEntry:
    id: str
    intrinsics_file: str | None = None
    a_pose_pattern: str | None = None
    observations_file: str | None = None
    visibility: tuple | None = None
    truth_z_file: str | None = None


@dataclass
class DatasetManifest:
    root: Path
    n_poses: int
    b_pose_pattern: str
    cameras: list = field(default_factory=list)
    target_file: str | None = None
    units: str = ""
    truth_x_file: str | None = None

    def path(self, name) -> Path:
        return self.root / name


@dataclass
class Dataset:
    """A loaded problem plus whatever ground truth the manifest names."""

    problem: CalibProblem
    manifest: DatasetManifest
    truth_x: np.ndarray | None = None
    truth_z: list | None = None


def _camera_order(cid: str):
    return (0, int(cid), "") if cid.isdigit() else (1, 0, cid)


def _pattern(value, key):
    try:
        value.format(0)
    except (IndexError, KeyError, ValueError) as exc:
        raise ManifestError(f"{key}: {value!r} is not a pose-index pattern") from exc
    return value


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetIOError(f"cannot read manifest {path}: {exc.strerror}") from exc
    top, cams = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("camera."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _CAMERA_KEYS:
                raise ManifestError(f"{path}:{lineno}: unknown camera key {key!r}")
            cams.setdefault(parts[1], {})[parts[2]] = value
        elif key in _TOP_KEYS:
            top[key] = value
        else:
            raise ManifestError(f"{path}:{lineno}: unknown key {key!r}")
    for req in ("n_poses", "b_pose_pattern"):
        if req not in top:
            raise ManifestError(f"{path}: missing required key {req!r}")
    try:
        n = int(top["n_poses"])
    except ValueError as exc:
        raise ManifestError(f"{path}: n_poses must be an integer") from exc
    if not cams:
        raise ManifestError(f"{path}: no camera.<id>.* entries")
    entries = []
    for cid in sorted(cams, key=_camera_order):
        c = dict(cams[cid])
        if "visibility" in c:
            try:
                vis = tuple(int(v) for v in c["visibility"].replace(",", " ").split())
            except ValueError as exc:
                raise ManifestError(f"camera {cid}: visibility must list pose indices") from exc
            bad = [i for i in vis if not 0 <= i < n]
            if bad:
                raise ManifestError(f"camera {cid}: visibility index {bad[0]} outside [0, {n})")
            c["visibility"] = vis
        if "a_pose_pattern" in c:
            _pattern(c["a_pose_pattern"], f"camera.{cid}.a_pose_pattern")
        entries.append(CameraEntry(id=cid, **c))
    return DatasetManifest(
        root=path.parent,
        n_poses=n,
        b_pose_pattern=_pattern(top["b_pose_pattern"], "b_pose_pattern"),
        cameras=entries,
        target_file=top.get("target_file"),
        units=top.get("units", ""),
        truth_x_file=top.get("truth_x_file"),
    )


def _read(loader, path: Path, what: str):
    if not path.is_file():
        raise DatasetIOError(f"missing {what} file: {path}")
    try:
        return loader(path)
    except (OSError, ValueError) as exc:
        raise DatasetIOError(f"cannot parse {what} file {path}: {exc}") from exc


def load_dataset(manifest_path) -> Dataset:
    """Read a manifest and every file it references into a :class:`Dataset`."""
    man = read_manifest(manifest_path)
    b_poses = []
    for i in range(man.n_poses):
        p = man.path(man.b_pose_pattern.format(i))
        if not p.is_file():
            raise ManifestError(f"B pose {i} is missing ({p}); manifest declares n_poses = {man.n_poses}")
        b_poses.append(_read(load_htm, p, f"B pose {i}"))
    target = _read(load_target, man.path(man.target_file), "target") if man.target_file else None

    obs_cache = {}
    cameras = []
    for entry in man.cameras:
        k = _read(load_intrinsics, man.path(entry.intrinsics_file), "intrinsics") \
            if entry.intrinsics_file else None
        obs = None
        if entry.observations_file:
            obs_path = man.path(entry.observations_file)
            if obs_path not in obs_cache:
                obs_cache[obs_path] = _read(load_observations, obs_path, "observations")
            obs = obs_cache[obs_path].get(entry.id)
            if obs is None:
                raise ManifestError(f"{obs_path} has no rows for camera {entry.id}")
            if np.any(obs.pose >= man.n_poses) or (target is not None and np.any(obs.point >= len(target))):
                raise ManifestError(f"camera {entry.id}: observations refer to poses or points out of range")

        if entry.visibility is not None:
            vis = entry.visibility
        elif obs is not None:
            vis = tuple(sorted(set(int(i) for i in obs.pose)))
        else:
            vis = tuple(range(man.n_poses))

        a_poses = {}
        if entry.a_pose_pattern:
            for i in vis:
                a_poses[i] = _read(load_htm, man.path(entry.a_pose_pattern.format(i)), f"A pose {i}")
        elif obs is not None and k is not None and target is not None:
            for i in vis:
                m = obs.pose == i
                a_poses[i] = estimate_pose(k, target, obs.point[m], obs.uv[m], camera=entry.id, pose=i)
        cameras.append(CameraData(a_poses=a_poses, intrinsics=k, observations=obs,
                                  visibility=vis, name=entry.id))
    try:
        problem = CalibProblem(b_poses=np.stack(b_poses), cameras=cameras, target=target)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc

    truth_x = _read(load_htm, man.path(man.truth_x_file), "truth X") if man.truth_x_file else None
    truth_z = None
    if all(c.truth_z_file for c in man.cameras):
        truth_z = [_read(load_htm, man.path(c.truth_z_file), "truth Z") for c in man.cameras]
    return Dataset(problem, man, truth_x, truth_z)


def dump_dataset(out_dir, problem: CalibProblem, truth_x=None, truth_z=None,
                 units="", write_a_poses=True) -> Path:
    """Write ``problem`` as a manifest directory and return the manifest path.

    A single camera gets ``A_0000.txt``, ``intrinsics.txt`` and
    ``truth_Z.txt``; with several cameras the names carry the camera id, as
    in ``A_1_0000.txt``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"n_poses = {problem.n_poses}", "b_pose_pattern = B_{:04d}.txt"]
    for i, b in enumerate(problem.b_poses):
        save_htm(out / f"B_{i:04d}.txt", b)
    if problem.target is not None:
        save_target(out / "target.txt", problem.target)
        lines.append("target_file = target.txt")
    if units:
        lines.append(f"units = {units}")
    if truth_x is not None:
        save_htm(out / "truth_X.txt", truth_x)
        lines.append("truth_x_file = truth_X.txt")

    observations = {c.name: c.observations for c in problem.cameras if c.observations is not None}
    if observations:
        save_observations(out / "observations.csv", observations)
    single = problem.n_cameras == 1
    for d, cam in enumerate(problem.cameras):
        cid = cam.name
        key = f"camera.{cid}"
        tag = "" if single else f"_{cid}"
        if cam.intrinsics is not None:
            save_intrinsics(out / f"intrinsics{tag}.txt", cam.intrinsics)
            lines.append(f"{key}.intrinsics_file = intrinsics{tag}.txt")
        if write_a_poses and cam.a_poses:
            for i, a in cam.a_poses.items():
                save_htm(out / f"A{tag}_{i:04d}.txt", a)
            lines.append(f"{key}.a_pose_pattern = A{tag}_{{:04d}}.txt")
        if cam.observations is not None:
            lines.append(f"{key}.observations_file = observations.csv")
        lines.append(f"{key}.visibility = " + ",".join(str(i) for i in cam.visibility))
        if truth_z is not None:
            save_htm(out / f"truth_Z{tag}.txt", truth_z[d])
            lines.append(f"{key}.truth_z_file = truth_Z{tag}.txt")
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
