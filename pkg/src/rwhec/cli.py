"""Command-line driver: ``rwhec <subcommand> ...``.

Exit status is 0 on success, 1 on a runtime failure (or when every requested
method fails) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .camera import make_chessboard
from .dataset import dump_dataset, load_dataset
from .errors import RwhecError
from .metrics import evaluate
from .nlls import SolverOptions
from .problem import CalibResult, Method
from .runner import RunConfig, RunEntry, report_header, report_row, run
from .se3 import RotationKind, load_htm
from .simulate import SimConfig, generate, run_sweep, synth_camera_dataset

log = logging.getLogger("rwhec")

CLASS1 = [m.value for m in Method if not m.is_reprojection]


def _csv_list(choices):
    def parse(text):
        items = [s.strip() for s in text.split(",") if s.strip()]
        bad = [s for s in items if s not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(
                f"invalid choice {bad[0] if bad else text!r} (choose from {', '.join(choices)})")
        return items
    return parse


def _board(text):
    try:
        r, c, s = text.lower().split("x")
        rows, cols, square = int(r), int(c), float(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("board must look like ROWSxCOLSxSQUARE, e.g. 6x8x10") from exc
    if rows < 2 or cols < 2 or square <= 0:
        raise argparse.ArgumentTypeError("board needs at least 2x2 corners and a positive square size")
    return rows, cols, square


def _eta(text):
    v = float(text)
    if not 0.0 <= v <= 0.25:
        raise argparse.ArgumentTypeError("eta must lie in [0, 0.25]")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwhec", description="Robot-world hand-eye calibration (AX = ZB).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    methods = [m.value for m in Method]
    rotations = [k.value for k in RotationKind]

    s = sub.add_parser("simulate", help="write a simulated AX=ZB dataset with known X and Z")
    s.add_argument("--scale", choices=["unit", "mm"], default="unit",
                   help="translation components drawn from (0, 1) or (0, 1000)")
    s.add_argument("--eta", type=_eta, default=0.0, help="quaternion noise on B rotations")
    s.add_argument("--poses", type=int, default=25)
    s.add_argument("--trials", type=_positive_int, default=1,
                   help="more than one writes trial_000/, trial_001/, ... under --out")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, required=True, help="output directory")

    s = sub.add_parser("sweep", help="noise sweep over the 19-level eta grid")
    s.add_argument("--solvers", type=_csv_list(CLASS1), default=CLASS1, help="comma list of class-1 methods")
    s.add_argument("--rotations", type=_csv_list(rotations), default=rotations)
    s.add_argument("--scale", choices=["unit", "mm"], default="unit")
    s.add_argument("--poses", type=int, default=25)
    s.add_argument("--trials", type=_positive_int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--parallel", action="store_true", help="run cells concurrently")
    s.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    s = sub.add_parser("calibrate", help="estimate X and Z from a dataset manifest")
    s.add_argument("--manifest", type=Path, required=True)
    s.add_argument("--methods", type=_csv_list(methods),
                   help="comma list (default: every method the dataset supports)")
    s.add_argument("--rotations", type=_csv_list(rotations), default=rotations)
    s.add_argument("--max-iterations", type=_positive_int, default=SolverOptions().max_iterations)
    s.add_argument("--parallel", action="store_true", help="run rotation kinds concurrently")
    s.add_argument("--out", type=Path, help="directory for report.csv and X/Z files (default: report to stdout)")

    s = sub.add_parser("evaluate", help="score given X and Z transforms on a dataset")
    s.add_argument("--manifest", type=Path, required=True)
    s.add_argument("--x", type=Path, required=True, help="X transform file")
    s.add_argument("--z", type=Path, nargs="+", required=True, help="one Z transform file per camera")
    s.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    s = sub.add_parser("synth-camera", help="write a synthetic camera dataset with corner detections")
    s.add_argument("--poses", type=int, default=25)
    s.add_argument("--board", type=_board, default=(6, 8, 10.0), metavar="RxCxS",
                   help="inner corners and square size in mm (default 6x8x10)")
    s.add_argument("--noise-px", type=float, default=0.0, help="RMS pixel noise of the detections")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-a-poses", action="store_true",
                   help="omit A files so loading recovers them by pose estimation")
    s.add_argument("--out", type=Path, required=True)
    return p


def _open_out(path):
    if path is None:
        return sys.stdout, False
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def cmd_simulate(args) -> int:
    cfg = SimConfig(n_poses=args.poses, translation_scale=args.scale, eta=args.eta,
                    seed=args.seed, trials=args.trials)
    for trial in range(args.trials):
        ds = generate(cfg, trial)
        out = args.out if args.trials == 1 else args.out / f"trial_{trial:03d}"
        manifest = dump_dataset(out, ds.problem(), ds.truth_x, [ds.truth_z], units=args.scale)
        print(manifest)
    return 0


def cmd_sweep(args) -> int:
    cfg = SimConfig(n_poses=args.poses, translation_scale=args.scale, seed=args.seed, trials=args.trials)
    report = run_sweep(cfg, args.solvers, args.rotations, parallel=args.parallel)
    f, own = _open_out(args.out)
    try:
        report.write_csv(f)
    finally:
        if own:
            f.close()
    failed = sum(r.failed for r in report.rows)
    if failed:
        log.warning("%d of %d sweep cells failed", failed, len(report.rows))
    return 1 if failed == len(report.rows) else 0


def _default_methods(problem):
    out = []
    if problem.has_a_poses():
        out += CLASS1
        if problem.has_observations() and problem.has_intrinsics():
            out += ["rp1", "rp2"]
    return out


def cmd_calibrate(args) -> int:
    ds = load_dataset(args.manifest)
    methods = args.methods or _default_methods(ds.problem)
    if not methods:
        raise RwhecError("the dataset supports no calibration method (no A poses and no detections)")
    if "rp2" in methods:
        log.warning("rp2 refines all 12 intrinsics per camera without priors; on an already "
                    "well-calibrated camera this can slightly worsen reconstruction accuracy")
    config = RunConfig(methods=methods, rotations=args.rotations,
                       options=SolverOptions(max_iterations=args.max_iterations),
                       out_dir=args.out, parallel=args.parallel)
    entries = run(config, ds.problem)
    if args.out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(report_header(ds.problem))
        for e in entries:
            w.writerow(report_row(e, ds.problem))
    for e in entries:
        if not e.ok:
            print(f"rwhec: {e.method.value}/{e.rotation.value} {e.status}", file=sys.stderr)
    return 0 if any(e.ok for e in entries) else 1


def cmd_evaluate(args) -> int:
    ds = load_dataset(args.manifest)
    problem = ds.problem
    if len(args.z) != problem.n_cameras:
        raise RwhecError(f"dataset has {problem.n_cameras} cameras but {len(args.z)} Z files were given")
    x = load_htm(args.x)
    zs = [load_htm(p) for p in args.z]
    result = CalibResult(x, zs, RotationKind.QUATERNION, Method.C1_SIM)
    entry = RunEntry(Method.C1_SIM, RotationKind.QUATERNION, result, evaluate(result, problem))
    f, own = _open_out(args.out)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(report_header(problem))
        w.writerow(report_row(entry, problem, method_label="given", rotation_label="-"))
    finally:
        if own:
            f.close()
    return 0


def cmd_synth_camera(args) -> int:
    rows, cols, square = args.board
    ds = synth_camera_dataset(n_poses=args.poses, target=make_chessboard(rows, cols, square),
                              pixel_noise_sigma=args.noise_px, seed=args.seed)
    manifest = dump_dataset(args.out, ds.problem, ds.truth_x, ds.truth_z, units="mm",
                            write_a_poses=not args.no_a_poses)
    print(manifest)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "synth-camera": cmd_synth_camera,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RwhecError, OSError, ValueError) as exc:
        print(f"rwhec {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
