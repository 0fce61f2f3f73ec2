"""A library of full-pose VMPs supporting the five spatial operations.

Every operation either fully applies or leaves the library untouched, and is
recorded in an append-only log that can be replayed on an empty library.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .detect import DetectConfig, greedy_detect
from .errors import BasisMismatch, CorruptFile, NoCandidates, UndefinedEstimate, UnknownId
from .manifold import dist_m
from .moments import MomentEstimator, merge as merge_moments, split as split_moments
from .tasks import TaskModel
from .vmp import BasisConfig, Demonstration, SolverConfig, ViaPointSet, VmpModel, fit_weights

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LibraryConfig:
    basis: BasisConfig = BasisConfig()
    detect: DetectConfig = DetectConfig()
    solver: SolverConfig = SolverConfig()
    split_count_factor: float = 0.5
    slot_window: float = 0.1
    assign_eps: float = 1e-6

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.to_dict(),
            "detect": self.detect.to_dict(),
            "solver": self.solver.to_dict(),
            "split_count_factor": self.split_count_factor,
            "slot_window": self.slot_window,
            "assign_eps": self.assign_eps,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> LibraryConfig:
        return cls(
            basis=BasisConfig.from_dict(d["basis"]),
            detect=DetectConfig(**d["detect"]),
            solver=SolverConfig(**d["solver"]),
            split_count_factor=float(d["split_count_factor"]),
            slot_window=float(d["slot_window"]),
            assign_eps=float(d["assign_eps"]),
        )


@dataclass(eq=False)
class Entry:
    model: VmpModel
    task: TaskModel


@dataclass(eq=False)
class Library:
    config: LibraryConfig = field(default_factory=LibraryConfig)
    entries: dict[int, Entry] = field(default_factory=dict)
    next_id: int = 1
    log: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, mp_id: int) -> bool:
        return mp_id in self.entries

    @property
    def ids(self) -> list[int]:
        return sorted(self.entries)

    def get(self, mp_id: int) -> Entry:
        try:
            return self.entries[mp_id]
        except KeyError:
            raise UnknownId(f"no movement primitive with id {mp_id}") from None

    def _take_id(self) -> int:
        mp_id = self.next_id
        self.next_id += 1
        return mp_id

    def detect_viapoints(self, w_o: np.ndarray, demo: Demonstration, basis: BasisConfig | None = None):
        """Trajectory via-points (phase, demonstrated pose) found on ``demo``."""
        if self.config.detect.max_viapoints == 0:
            return []
        res = greedy_detect(basis or self.config.basis, w_o, demo, self.config.detect, self.config.solver)
        return res.targets(demo)

    # -- operations -----------------------------------------------------------

    def add_mp(self, demo: Demonstration) -> int:
        basis = self.config.basis
        x = fit_weights(demo, basis)
        vias = self.detect_viapoints(x, demo, basis)
        task = TaskModel.from_demo(demo.start, demo.goal, demo.duration, vias)
        mp_id = self._take_id()
        self.entries[mp_id] = Entry(VmpModel(basis, MomentEstimator.from_sample(x), mp_id), task)
        self.log.append({"op": "add", "demo": demo.digest(), "id": mp_id})
        return mp_id

    def improve_mp(self, mp_id: int, demo: Demonstration) -> None:
        entry = self.get(mp_id)
        basis = entry.model.basis
        x = fit_weights(demo, basis)
        model = VmpModel(basis, entry.model.weights.update(x), mp_id)
        vias = self.detect_viapoints(model.weight_mean, demo, basis)
        task = entry.task.update(demo.start, demo.goal, demo.duration, vias, self.config.slot_window)
        self.entries[mp_id] = Entry(model, task)
        self.log.append({"op": "improve", "id": mp_id, "demo": demo.digest()})

    def remove_mp(self, mp_id: int) -> None:
        self.get(mp_id)
        del self.entries[mp_id]
        self.log.append({"op": "remove", "id": mp_id})

    def merge_modes(self, id_a: int, id_b: int) -> int:
        a, b = self.get(id_a), self.get(id_b)
        if id_a == id_b:
            raise UnknownId("cannot merge a movement primitive with itself")
        if a.model.basis != b.model.basis:
            raise BasisMismatch(f"modes {id_a} and {id_b} use different basis configurations")
        weights = merge_moments(a.model.weights, b.model.weights)
        task = a.task.merge(b.task, self.config.slot_window)
        mp_id = self._take_id()
        del self.entries[id_a], self.entries[id_b]
        self.entries[mp_id] = Entry(VmpModel(a.model.basis, weights, mp_id), task)
        self.log.append({"op": "merge", "a": id_a, "b": id_b, "id": mp_id})
        return mp_id

    def split_mode(self, mp_id: int, demo: Demonstration) -> tuple[int, int]:
        """Split a mode using a demonstration typical of the first child.

        The demonstration fixes the first child's weight mean and is counted
        into its task model.  Weight counts stay equal so that merging the
        children restores the parent mean.
        """
        entry = self.get(mp_id)
        if entry.model.weights.n < 2:
            raise UndefinedEstimate(f"mode {mp_id} has fewer than 2 demonstrations; cannot split")
        basis = entry.model.basis
        factor = self.config.split_count_factor
        x = fit_weights(demo, basis)
        wa, wb = split_moments(entry.model.weights, x, factor)
        child_task = entry.task.with_count_factor(0.5 * factor)
        ia, ib = self.next_id, self.next_id + 1
        model_a = VmpModel(basis, wa, ia)
        vias = self.detect_viapoints(model_a.weight_mean, demo, basis)
        task_a = child_task.update(demo.start, demo.goal, demo.duration, vias, self.config.slot_window)
        self.next_id += 2
        del self.entries[mp_id]
        self.entries[ia] = Entry(model_a, task_a)
        self.entries[ib] = Entry(VmpModel(basis, wb, ib), child_task)
        self.log.append({"op": "split", "id": mp_id, "demo": demo.digest(), "ids": [ia, ib]})
        return ia, ib

    def assign_demo_to_mode(self, demo: Demonstration, candidates: Iterable[int] | None = None) -> int:
        """Most probable mode for ``demo`` by Mahalanobis distance of its weights.

        Falls back to Euclidean distance when any candidate has fewer than two
        demonstrations.  Ties go to the smaller id.
        """
        ids = sorted(self.ids if candidates is None else set(candidates))
        if not ids:
            raise NoCandidates("no candidate modes to assign to")
        entries = [self.get(i) for i in ids]
        x = fit_weights(demo, entries[0].model.basis)
        euclid = any(e.model.weights.n < 2 for e in entries)
        best, best_d = ids[0], np.inf
        for mp_id, e in zip(ids, entries):
            diff = x - e.model.weights.mu_hat
            if euclid:
                d = float(diff @ diff)
            else:
                C = e.model.weights.covariance() + self.config.assign_eps * np.eye(len(x))
                d = float(diff @ np.linalg.solve(C, diff))
            if d < best_d:
                best, best_d = mp_id, d
        return best

    # -- execution ------------------------------------------------------------

    def execution_viapoints(
        self,
        mp_id: int,
        start=None,
        goal=None,
        vias: Iterable[tuple[float, np.ndarray]] | None = None,
        use_task_vias: bool = False,
    ) -> ViaPointSet:
        """Elementary via-points realizing the requested task parameters.

        Missing start/goal fall back to the task-model means.  Trajectory
        via-points are converted to elementary ones by the gradient solver.
        """
        entry = self.get(mp_id)
        start = entry.task.start.mean if start is None else np.asarray(start, dtype=float)
        goal = entry.task.goal.mean if goal is None else np.asarray(goal, dtype=float)
        targets = list(vias or [])
        if use_task_vias:
            targets += entry.task.viapoint_targets()
        vps = self._solve_endpoints(entry.model, start, goal)
        prepared = entry.model.prepare(vps)
        for phi, pose in sorted(targets, key=lambda t: t[0]):
            if np.any(np.isclose(vps.phases, phi, rtol=0.0, atol=1e-12)):
                continue
            res = prepared.solve_viapoint(pose, phi, self.config.solver)
            if not res.converged:
                log.warning("via-point at phase %.4f did not converge (residual %.3g)", phi, res.residual)
            vps = vps.inserted(phi, res.pose)
        return vps

    def _solve_endpoints(self, model: VmpModel, start, goal, max_rounds: int = 20) -> ViaPointSet:
        """Elementary start and goal whose execution hits ``start`` and ``goal``.

        The modulation frame depends on both endpoints, so the two solves are
        repeated until the executed endpoints agree with the targets.
        """
        cfg = self.config.solver
        vps = ViaPointSet.from_endpoints(start, goal)
        for _ in range(max_rounds):
            prepared = model.prepare(vps)
            ends = prepared.rollout(vps, [0.0, 1.0])
            residual = float(np.max(dist_m(ends, np.array([start, goal]), cfg.alpha)))
            if residual < cfg.tol:
                return vps
            h0 = prepared.solve_viapoint(start, 0.0, cfg).pose
            h1 = prepared.solve_viapoint(goal, 1.0, cfg).pose
            vps = ViaPointSet.from_endpoints(h0, h1)
        log.warning("start/goal solve stopped at residual %.3g", residual)
        return vps

    def rollout(self, mp_id: int, phis, **task) -> np.ndarray:
        vps = self.execution_viapoints(mp_id, **task)
        return self.get(mp_id).model.rollout(vps, phis)

    # -- replay ---------------------------------------------------------------

    @classmethod
    def replay(cls, config: LibraryConfig, oplog: Iterable[Mapping], demos: Mapping[str, Demonstration]) -> Library:
        """Rebuild a library by re-applying a log to an empty one.

        ``demos`` maps demonstration digests to demonstrations.
        """
        lib = cls(config)

        def demo(entry):
            try:
                return demos[entry["demo"]]
            except KeyError:
                raise CorruptFile(f"log references unknown demonstration {entry['demo']}") from None

        for entry in oplog:
            op = entry["op"]
            if op == "add":
                got = lib.add_mp(demo(entry))
                expected = entry["id"]
            elif op == "improve":
                lib.improve_mp(entry["id"], demo(entry))
                got = expected = None
            elif op == "remove":
                lib.remove_mp(entry["id"])
                got = expected = None
            elif op == "merge":
                got = lib.merge_modes(entry["a"], entry["b"])
                expected = entry["id"]
            elif op == "split":
                got = list(lib.split_mode(entry["id"], demo(entry)))
                expected = list(entry["ids"])
            else:
                raise CorruptFile(f"unknown operation {op!r} in log")
            if got != expected:
                raise CorruptFile(f"replay of {op} produced id {got}, log says {expected}")
        return lib
