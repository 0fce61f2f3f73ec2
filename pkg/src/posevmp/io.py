"""Trajectory CSV files and the JSON library format.

Library files hold the model state only.  The operation log lives next to
it in ``<library>.log`` (one JSON object per line) so that the state file
stays bounded in size no matter how many demonstrations were processed.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from filelock import FileLock

from .errors import BadQuaternion, CorruptFile, NonMonotoneTime, ParseError, VersionMismatch
from .library import Entry, Library, LibraryConfig
from .manifold import align_hemispheres
from .moments import MomentEstimator
from .tasks import FrechetEstimator, PoseEstimator, TaskModel, ViaPointSlot
from .vmp import BasisConfig, Demonstration, VmpModel

FORMAT = "posevmp-library"
VERSION = 1
TRAJECTORY_HEADER = ["t", "x", "y", "z", "qw", "qx", "qy", "qz"]


# ---------------------------------------------------------------------------
# trajectories


def parse_trajectory(text: str, name: str = "") -> Demonstration:
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip() for c in row] == TRAJECTORY_HEADER:
            continue
        if len(row) != 8:
            raise ParseError(f"row {lineno}: expected 8 columns, got {len(row)}", row=lineno)
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise ParseError(f"row {lineno}: non-numeric value", row=lineno) from None
        if not np.all(np.isfinite(values)):
            raise ParseError(f"row {lineno}: non-finite value", row=lineno)
        norm = np.linalg.norm(values[4:])
        if abs(norm - 1.0) > 1e-3:
            raise BadQuaternion(f"row {lineno}: quaternion norm {norm:.6f} is not 1", row=lineno)
        if rows and values[0] <= rows[-1][1][0]:
            raise NonMonotoneTime(f"row {lineno}: timestamp {values[0]} does not increase", row=lineno)
        rows.append((lineno, values))
    if len(rows) < 2:
        raise ParseError("a trajectory needs at least 2 rows")
    data = np.array([v for _, v in rows])
    quats = data[:, 4:] / np.linalg.norm(data[:, 4:], axis=1, keepdims=True)
    return Demonstration.from_arrays(data[:, 0], data[:, 1:4], align_hemispheres(quats), name=name)


def read_trajectory(path) -> Demonstration:
    path = Path(path)
    return parse_trajectory(path.read_text(), name=path.stem)


def format_trajectory(times, poses) -> str:
    out = [",".join(TRAJECTORY_HEADER)]
    for t, pose in zip(np.asarray(times, dtype=float), np.asarray(poses, dtype=float)):
        out.append(",".join(repr(float(v)) for v in (t, *pose)))
    return "\n".join(out) + "\n"


def write_trajectory(path, times, poses) -> None:
    atomic_write(path, format_trajectory(times, poses))


# ---------------------------------------------------------------------------
# library state <-> plain data


def _est_to(e: MomentEstimator) -> dict:
    return {"n": e.n, "mu_hat": e.mu_hat.tolist(), "S_hat": e.S_hat.tolist()}


def _est_from(d: dict) -> MomentEstimator:
    return MomentEstimator(d["n"], np.array(d["mu_hat"], dtype=float), np.array(d["S_hat"], dtype=float))


def _pose_to(p: PoseEstimator) -> dict:
    return {
        "position": _est_to(p.position),
        "orientation": {"mean": p.orientation.mean.tolist(), "moments": _est_to(p.orientation.moments)},
    }


def _pose_from(d: dict) -> PoseEstimator:
    o = d["orientation"]
    return PoseEstimator(
        _est_from(d["position"]),
        FrechetEstimator(np.array(o["mean"], dtype=float), _est_from(o["moments"])),
    )


def _task_to(t: TaskModel) -> dict:
    return {
        "start": _pose_to(t.start),
        "goal": _pose_to(t.goal),
        "duration": _est_to(t.duration),
        "slots": [{"phase": _est_to(s.phase), "pose": _pose_to(s.pose)} for s in t.slots],
    }


def _task_from(d: dict) -> TaskModel:
    return TaskModel(
        _pose_from(d["start"]),
        _pose_from(d["goal"]),
        _est_from(d["duration"]),
        [ViaPointSlot(_est_from(s["phase"]), _pose_from(s["pose"])) for s in d["slots"]],
    )


def library_to_dict(lib: Library) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": lib.config.to_dict(),
        "next_id": lib.next_id,
        "mps": [
            {
                "id": mp_id,
                "basis": e.model.basis.to_dict(),
                "weights": _est_to(e.model.weights),
                "task": _task_to(e.task),
            }
            for mp_id, e in sorted(lib.entries.items())
        ],
    }


def library_from_dict(d: dict) -> Library:
    if not isinstance(d, dict) or d.get("format") != FORMAT:
        raise CorruptFile("not a library file")
    if d.get("version") != VERSION:
        raise VersionMismatch(f"library version {d.get('version')} is not supported (expected {VERSION})")
    try:
        lib = Library(LibraryConfig.from_dict(d["config"]), next_id=int(d["next_id"]))
        for m in d["mps"]:
            mp_id = int(m["id"])
            model = VmpModel(BasisConfig.from_dict(m["basis"]), _est_from(m["weights"]), mp_id)
            lib.entries[mp_id] = Entry(model, _task_from(m["task"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"malformed library file: {exc}") from exc
    return lib


def dumps_library(lib: Library) -> str:
    return json.dumps(library_to_dict(lib), indent=1) + "\n"


def loads_library(text: str) -> Library:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"library file is not valid JSON: {exc}") from exc
    return library_from_dict(d)


def dumps_log(oplog) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in oplog)


def loads_log(text: str) -> list[dict]:
    try:
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"operation log is not valid JSON lines: {exc}") from exc


# ---------------------------------------------------------------------------
# files


def log_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".log")


def _default_mode() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        os.chmod(tmp, path.stat().st_mode & 0o777 if path.exists() else _default_mode())
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@contextmanager
def locked(path):
    with FileLock(str(path) + ".lock"):
        yield


def write_library(lib: Library, path) -> None:
    """Write state and log atomically; the caller holds the lock."""
    atomic_write(log_path(path), dumps_log(lib.log))
    atomic_write(path, dumps_library(lib))


def save_library(lib: Library, path) -> None:
    with locked(path):
        write_library(lib, path)


def load_library(path) -> Library:
    path = Path(path)
    lib = loads_library(path.read_text())
    lp = log_path(path)
    if lp.exists():
        lib.log = loads_log(lp.read_text())
    return lib
