"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.
Mutating commands hold a file lock, load the library, apply one operation
and write the result atomically; on any failure the files are untouched.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .batch_oracle import batch_fit_library, compare
from .detect import STRATEGIES, greedy_detect
from .errors import BasisMismatch, DataError, VmpError
from .experiments import detection_table, operations_report, render_detection_table
from .io import format_trajectory, load_library, locked, read_trajectory, write_library, write_trajectory
from .library import Library, LibraryConfig
from .synth import FAMILIES, generate
from .vmp import BasisConfig


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def parse_pose(text: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid pose {text!r}: expected 7 comma-separated numbers") from None
    if len(values) != 7:
        raise argparse.ArgumentTypeError(f"invalid pose {text!r}: expected x,y,z,qw,qx,qy,qz")
    pose = np.array(values)
    norm = np.linalg.norm(pose[3:])
    if not np.isfinite(norm) or abs(norm - 1.0) > 1e-3:
        raise argparse.ArgumentTypeError(f"invalid pose {text!r}: quaternion norm {norm:.6f} is not 1")
    pose[3:] /= norm
    return pose


def parse_via(text: str) -> tuple[float, np.ndarray]:
    phase, sep, pose = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"invalid via-point {text!r}: expected phase:x,y,z,qw,qx,qy,qz")
    try:
        phi = float(phase)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid via-point phase {phase!r}") from None
    if not 0.0 < phi < 1.0:
        raise argparse.ArgumentTypeError(f"via-point phase {phi} must lie strictly between 0 and 1")
    return phi, parse_pose(pose)


def parse_ids(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid id list {text!r}") from None


def read_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return d


def _replace(obj, updates: dict, section: str):
    fields = {f.name for f in dataclasses.fields(obj)}
    unknown = set(updates) - fields
    if unknown:
        raise UsageError(f"unknown {section} option(s): {', '.join(sorted(unknown))}")
    return dataclasses.replace(obj, **updates) if updates else obj


def build_config(args, base: LibraryConfig | None = None) -> LibraryConfig:
    """Defaults (or the stored config) < config file < command-line flags."""
    cfg = base or LibraryConfig()
    fc = read_config_file(getattr(args, "config", None))
    flags = {
        "basis": {"k": getattr(args, "k", None)},
        "detect": {
            "strategy": getattr(args, "strategy", None),
            "theta": getattr(args, "theta", None),
            "alpha": getattr(args, "alpha", None),
            "max_viapoints": getattr(args, "max_n", None),
        },
        "solver": {"tol": getattr(args, "tol", None), "alpha": getattr(args, "alpha", None)},
    }
    sections = {}
    for name in ("basis", "detect", "solver"):
        upd = dict(fc.get(name, {}))
        upd.update({k: v for k, v in flags[name].items() if v is not None})
        sections[name] = upd
    top = {k: v for k, v in fc.items() if k not in sections}
    try:
        basis = _replace(cfg.basis, sections["basis"], "basis")
        if base is not None and basis != base.basis:
            raise BasisMismatch("the basis of an existing library cannot be changed")
        cfg = _replace(cfg, top, "library")
        return dataclasses.replace(
            cfg,
            basis=basis,
            detect=_replace(cfg.detect, sections["detect"], "detect"),
            solver=_replace(cfg.solver, sections["solver"], "solver"),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def open_library(path, args, create: bool = False) -> Library:
    path = Path(path)
    if not path.exists():
        if not create:
            raise DataError(f"library file {path} does not exist")
        return Library(build_config(args))
    lib = load_library(path)
    lib.config = build_config(args, lib.config)
    return lib


def mutate(args, op, create: bool = False):
    with locked(args.lib):
        lib = open_library(args.lib, args, create)
        result = op(lib)
        write_library(lib, args.lib)
    return result


# ---------------------------------------------------------------------------
# commands


def cmd_add(args):
    demo = read_trajectory(args.demo)
    print(mutate(args, lambda lib: lib.add_mp(demo), create=True))


def cmd_improve(args):
    demo = read_trajectory(args.demo)
    mutate(args, lambda lib: lib.improve_mp(args.id, demo))


def cmd_remove(args):
    mutate(args, lambda lib: lib.remove_mp(args.id))


def cmd_merge(args):
    print(mutate(args, lambda lib: lib.merge_modes(args.id_a, args.id_b)))


def cmd_split(args):
    demo = read_trajectory(args.demo)
    ia, ib = mutate(args, lambda lib: lib.split_mode(args.id, demo))
    print(ia, ib)


def cmd_assign(args):
    demo = read_trajectory(args.demo)
    lib = open_library(args.lib, args)
    print(lib.assign_demo_to_mode(demo, args.candidates))


def cmd_rollout(args):
    lib = open_library(args.lib, args)
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    phis = np.linspace(0.0, 1.0, args.samples)
    poses = lib.rollout(args.id, phis, start=args.start, goal=args.goal, vias=args.via,
                        use_task_vias=args.task_vias)
    duration = args.duration if args.duration is not None else lib.get(args.id).task.mean_duration
    if args.out:
        write_trajectory(args.out, phis * duration, poses)
    else:
        sys.stdout.write(format_trajectory(phis * duration, poses))


def cmd_detect(args):
    lib = open_library(args.lib, args)
    demo = read_trajectory(args.demo)
    model = lib.get(args.id).model
    res = greedy_detect(model.basis, model.weight_mean, demo, lib.config.detect, lib.config.solver)
    if args.json:
        payload = {
            "viapoints": [{"phase": p, "pose": y.tolist()} for p, y in res.targets(demo)],
            "rows": [dataclasses.asdict(r) for r in res.rows],
            "failures": res.failures,
            "duration": res.duration,
        }
        print(json.dumps(payload, indent=1))
        return
    print("phase,x,y,z,qw,qx,qy,qz")
    for p, y in res.targets(demo):
        print(",".join(repr(float(v)) for v in (p, *y)))
    print()
    print(f"{'strategy':<17} {'iter':>4} {'#vp':>3} {'mean':>10} {'max':>10} {'time [s]':>9}  event")
    for r in res.rows:
        print(f"{r.strategy:<17} {r.iteration:>4} {r.n_viapoints:>3} {r.mean:>10.6f} {r.max:>10.6f} "
              f"{r.duration:>9.4f}  {r.event}")


def _demo_files(directory) -> list[Path]:
    files = sorted(Path(directory).glob("*.csv"))
    if not files:
        raise DataError(f"no .csv trajectories in {directory}")
    return files


def cmd_eval(args):
    lib = open_library(args.lib, args)
    manifest = json.loads(Path(args.modes).read_text())
    modes = manifest.get("modes", manifest) if isinstance(manifest, dict) else None
    if not isinstance(modes, dict) or not modes:
        raise DataError(f"manifest {args.modes} must map mode names to {{'id': .., 'demos': [..]}}")
    demo_dir = Path(args.demos)
    groups, correspondence = {}, {}
    for name, item in modes.items():
        try:
            correspondence[name] = int(item["id"])
            groups[name] = [read_trajectory(demo_dir / f) for f in item["demos"]]
        except (KeyError, TypeError) as exc:
            raise DataError(f"manifest entry {name!r} is malformed: {exc}") from None
    basis = lib.config.basis
    report = compare(lib, batch_fit_library(groups, basis), correspondence, {"k": basis.k})
    _print_report(report, args.json)


def cmd_eval_ops(args):
    report = operations_report(args.seed, args.samples, BasisConfig(k=args.k or 20))
    _print_report(report, args.json)


def _print_report(report, as_json: bool):
    if as_json:
        print(json.dumps({"metadata": report.metadata, "rows": report.as_dicts()}, indent=1))
    else:
        print(report.render())


def cmd_eval_detect(args):
    demos = [read_trajectory(f) for f in _demo_files(args.demos)]
    strategies = STRATEGIES if args.strategies == "all" else tuple(s.strip() for s in args.strategies.split(","))
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise UsageError(f"unknown strategy {', '.join(sorted(unknown))}; choose from {', '.join(STRATEGIES)}")
    cfg = build_config(args)
    rows = detection_table(demos, strategies, tuple(args.budgets), cfg.detect.theta, cfg.detect.alpha, cfg.basis)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_max", "strategy", "mean", "std", "duration_mean", "duration_std"])
            for r in rows:
                w.writerow([r.n_max, r.strategy, repr(r.mean), repr(r.std), repr(r.duration_mean), repr(r.duration_std)])
    if args.json:
        print(json.dumps([dataclasses.asdict(r) for r in rows], indent=1))
    else:
        print(render_detection_table(rows))


def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for d in generate(args.family, args.count, args.seed, args.samples, args.jitter):
        write_trajectory(out / f"{d.name}.csv", d.times, d.poses)
        print(out / f"{d.name}.csv")


# ---------------------------------------------------------------------------
# parser


def _config_flags(p, detect: bool = True):
    p.add_argument("--config", metavar="FILE", help="JSON config file; flags override it")
    p.add_argument("--k", type=int, help="number of basis functions (new libraries only)")
    p.add_argument("--alpha", type=float, help="orientation weight in pose distances")
    p.add_argument("--tol", type=float, help="via-point solver tolerance")
    if detect:
        p.add_argument("--theta", type=float, help="detection threshold on mean distance")
        p.add_argument("--strategy", choices=STRATEGIES, help="via-point phase selection")
        p.add_argument("--max-n", dest="max_n", type=int, help="via-point budget per demonstration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="posevmp", description="Incremental full-pose VMP libraries.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("add", help="learn a new primitive from a demonstration")
    p.add_argument("lib"), p.add_argument("demo")
    _config_flags(p)
    p.set_defaults(func=cmd_add)

    p = sub.add_parser("improve", help="update a primitive with a demonstration")
    p.add_argument("lib"), p.add_argument("id", type=int), p.add_argument("demo")
    _config_flags(p)
    p.set_defaults(func=cmd_improve)

    p = sub.add_parser("remove", help="delete a primitive")
    p.add_argument("lib"), p.add_argument("id", type=int)
    p.set_defaults(func=cmd_remove)

    p = sub.add_parser("merge", help="merge two modes into a new primitive")
    p.add_argument("lib"), p.add_argument("id_a", type=int), p.add_argument("id_b", type=int)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("split", help="split a mode around a demonstration")
    p.add_argument("lib"), p.add_argument("id", type=int), p.add_argument("demo")
    _config_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("assign", help="most probable mode for a demonstration")
    p.add_argument("lib"), p.add_argument("demo")
    p.add_argument("--candidates", type=parse_ids, help="comma-separated candidate ids")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("rollout", help="generate a trajectory")
    p.add_argument("lib"), p.add_argument("id", type=int)
    p.add_argument("--start", type=parse_pose, help="x,y,z,qw,qx,qy,qz (default: learned mean)")
    p.add_argument("--goal", type=parse_pose, help="x,y,z,qw,qx,qy,qz (default: learned mean)")
    p.add_argument("--via", type=parse_via, action="append", default=[], help="phase:x,y,z,qw,qx,qy,qz")
    p.add_argument("--task-vias", action="store_true", help="also pass through the learned via-points")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--duration", type=float, help="seconds (default: learned mean)")
    p.add_argument("--out", help="output file (default: standard output)")
    _config_flags(p, detect=False)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("detect", help="run via-point detection on a demonstration")
    p.add_argument("lib"), p.add_argument("id", type=int), p.add_argument("demo")
    p.add_argument("--json", action="store_true")
    _config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="compare library means with batch estimates")
    p.add_argument("lib")
    p.add_argument("--demos", required=True, help="directory of demonstration files")
    p.add_argument("--modes", required=True, help="JSON manifest: name -> {id, demos}")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-ops", help="scripted synthetic operation comparison")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--k", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_ops)

    p = sub.add_parser("eval-detect", help="compare via-point detection strategies")
    p.add_argument("--demos", required=True, help="directory of demonstration files")
    p.add_argument("--strategies", default="all", help="'all' or a comma-separated list")
    p.add_argument("--max-n", dest="budgets", type=int, nargs="+", default=[1, 3])
    p.add_argument("--theta", type=float, default=1e-4)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--out", help="write rows as CSV")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("synth", help="write seeded synthetic demonstrations")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--jitter", type=float, default=0.01)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VmpError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
