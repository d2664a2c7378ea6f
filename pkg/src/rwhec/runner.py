"""Run a roster of (method, rotation) pairs on one problem and write the report."""

from __future__ import annotations

import csv
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .axzb import solve_class1
from .camera import save_intrinsics
from .errors import ConfigError, RwhecError
from .metrics import MetricsReport, evaluate
from .nlls import SolverOptions
from .problem import CalibProblem, Method
from .reproj import ReprojResult, solve_rp1, solve_rp2
from .se3 import RotationKind, save_htm

__all__ = ["RunConfig", "RunEntry", "run", "report_header", "write_report", "ALL_METHODS", "ALL_ROTATIONS"]

log = logging.getLogger(__name__)

ALL_METHODS = tuple(Method)
ALL_ROTATIONS = tuple(RotationKind)


@dataclass
class RunConfig:
    methods: tuple = ALL_METHODS
    rotations: tuple = ALL_ROTATIONS
    options: SolverOptions = field(default_factory=SolverOptions)
    out_dir: Path | None = None
    parallel: bool = False

    def __post_init__(self):
        self.methods = tuple(Method.parse(m) for m in self.methods)
        self.rotations = tuple(RotationKind.parse(r) for r in self.rotations)
        if not self.methods or not self.rotations:
            raise ConfigError("need at least one method and one rotation")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    def check(self, problem: CalibProblem) -> None:
        """Raise :class:`ConfigError` if the problem lacks data a requested method needs."""
        wanted = set(self.methods)
        class1 = [m for m in wanted if not m.is_reprojection]
        if class1 and not problem.has_a_poses():
            raise ConfigError(f"{class1[0].value} needs A poses for every visible view")
        if wanted & {Method.RP1, Method.RP2}:
            if not problem.has_intrinsics():
                raise ConfigError("rp1/rp2 need intrinsics for every camera")
            if not problem.has_observations():
                raise ConfigError("rp1/rp2 need a target model and observations for every camera")
            if not problem.has_a_poses():
                raise ConfigError("rp1/rp2 are seeded by c2-sim, which needs A poses")


@dataclass
class RunEntry:
    method: Method
    rotation: RotationKind
    result: object = None
    metrics: MetricsReport | None = None
    time_s: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    @property
    def status(self) -> str:
        return "ok" if self.ok else f"failed: {self.error}"


def _chain(problem, kind, methods, options):
    """All requested methods for one rotation kind, honouring c2-sim -> rp1 -> rp2."""
    out = {}
    seeds = {}
    for method in ALL_METHODS:
        needed = method in methods or (
            method is Method.C2_SIM and (Method.RP1 in methods or Method.RP2 in methods)) or (
            method is Method.RP1 and Method.RP2 in methods)
        if not needed:
            continue
        entry = RunEntry(method, kind)
        start = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                if method is Method.RP1:
                    res = solve_rp1(problem, kind, options, seed=seeds.get(Method.C2_SIM))
                elif method is Method.RP2:
                    res = solve_rp2(problem, kind, options, seed=seeds.get(Method.RP1))
                else:
                    res = solve_class1(method, problem, kind, options)
            entry.time_s = time.perf_counter() - start
            entry.result = res
            seeds[method] = res
        except (RwhecError, ValueError, ArithmeticError, FloatingPointError) as exc:
            entry.time_s = time.perf_counter() - start
            entry.error = f"{type(exc).__name__}: {exc}"
            log.warning("%s/%s failed: %s", method.value, kind.value, entry.error)
        out[method] = entry
    return [out[m] for m in ALL_METHODS if m in methods and m in out]


def _evaluate(entry: RunEntry, problem: CalibProblem):
    if not entry.ok:
        return
    res = entry.result
    base = res.base if isinstance(res, ReprojResult) else res
    ks = res.refined_intrinsics if isinstance(res, ReprojResult) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            entry.metrics = evaluate(base, problem, intrinsics=ks, runtime_s=entry.time_s)
        except (RwhecError, ValueError) as exc:
            entry.error = f"evaluation {type(exc).__name__}: {exc}"


def run(config: RunConfig, problem: CalibProblem) -> list:
    """Solve, time and evaluate every (method, rotation) pair.

    Rows come back method-major in canonical method order. Individual method
    failures are recorded in their entry rather than raised. With
    ``config.out_dir`` set, the CSV report and one transform file per
    estimated ``X`` and ``Z_d`` are written there.
    """
    config.check(problem)
    kinds = list(config.rotations)
    if config.parallel and len(kinds) > 1:
        with ThreadPoolExecutor(max_workers=len(kinds)) as pool:
            chains = list(pool.map(lambda k: _chain(problem, k, config.methods, config.options), kinds))
    else:
        chains = [_chain(problem, k, config.methods, config.options) for k in kinds]
    by_key = {(e.method, e.rotation): e for chain in chains for e in chain}
    entries = [by_key[(m, k)] for m in ALL_METHODS if m in config.methods for k in kinds]
    for e in entries:
        _evaluate(e, problem)
    if config.out_dir is not None:
        write_outputs(entries, problem, config.out_dir)
    return entries


def report_header(problem: CalibProblem) -> list:
    return (["method", "rotation", "time_s", "e_r1", "e_r2_deg", "e_t_mm2", "e_c"]
            + [f"rrmse_px_{c.name}" for c in problem.cameras]
            + ["rae_mm", "rae_sq_mm2", "status"])


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def report_row(entry: RunEntry, problem: CalibProblem, method_label=None, rotation_label=None) -> list:
    m = entry.metrics
    q = problem.n_cameras
    head = [method_label or entry.method.value, rotation_label or entry.rotation.value, _num(entry.time_s)]
    if m is None:
        return head + [""] * (4 + q + 2) + [entry.status]
    rr = list(m.rrmse_per_camera) or [None] * q
    return head + [_num(m.e_r1), _num(m.e_r2), _num(m.e_t), _num(m.e_c)] + [_num(v) for v in rr] \
        + [_num(m.rae), _num(m.rae_sq), entry.status]


def write_report(path, entries, problem: CalibProblem) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(report_header(problem))
        for e in entries:
            w.writerow(report_row(e, problem))


def write_outputs(entries, problem: CalibProblem, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "report.csv", entries, problem)
    for e in entries:
        if not e.ok or e.result is None:
            continue
        stem = f"{e.method.value}_{e.rotation.value}"
        save_htm(out / f"{stem}_X.txt", e.result.x)
        for cam, z in zip(problem.cameras, e.result.z):
            save_htm(out / f"{stem}_Z_{cam.name}.txt", z)
        if isinstance(e.result, ReprojResult) and e.result.refined_intrinsics:
            for cam, k in zip(problem.cameras, e.result.refined_intrinsics):
                save_intrinsics(out / f"{stem}_intrinsics_{cam.name}.txt", k)
