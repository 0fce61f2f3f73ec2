"""Greedy detection of via-points that explain reconstruction mismatch."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, LengthMismatch, NoDeviation
from .manifold import dist_m
from .vmp import BasisConfig, Demonstration, PreparedVmp, SolverConfig, ViaPointSet

log = logging.getLogger(__name__)

STRATEGIES = ("max_distance", "brute_force", "weighted_average")


@dataclass(frozen=True)
class DetectConfig:
    strategy: str = "max_distance"
    theta: float = 0.005
    alpha: float = 0.1
    max_viapoints: int = 3
    prune_epsilon: float = 0.05

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.max_viapoints < 0 or self.prune_epsilon < 0:
            raise ValueError("max_viapoints and prune_epsilon must be non-negative")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class IterationRow:
    strategy: str
    iteration: int
    n_viapoints: int
    mean: float
    max: float
    duration: float
    event: str = ""


@dataclass
class DetectionResult:
    viapoints: ViaPointSet
    rows: list[IterationRow] = field(default_factory=list)
    failures: list[tuple[float, str]] = field(default_factory=list)
    duration: float = 0.0

    @property
    def initial_mean(self) -> float:
        return self.rows[0].mean

    @property
    def final_mean(self) -> float:
        return self.rows[-1].mean

    def targets(self, demo: Demonstration) -> list[tuple[float, np.ndarray]]:
        """Demonstrated poses at the detected interior via-point phases."""
        idx = [int(np.argmin(np.abs(demo.phases - p))) for p, _ in self.viapoints.interior]
        return [(float(demo.phases[i]), demo.poses[i]) for i in idx]


def per_sample_distances(demo_poses, reconstruction, alpha: float) -> np.ndarray:
    demo_poses = np.asarray(demo_poses, dtype=float)
    reconstruction = np.asarray(reconstruction, dtype=float)
    if demo_poses.shape != reconstruction.shape:
        raise LengthMismatch(
            f"demonstration has {len(demo_poses)} samples, reconstruction {len(reconstruction)}"
        )
    return dist_m(demo_poses, reconstruction, alpha)


def select_max_distance(phases, distances, exclude=()) -> float:
    """Phase of the largest distance; ties resolve to the smaller phase."""
    d = np.array(distances, dtype=float)
    d[list(exclude)] = -np.inf
    if not np.any(d >= 1e-12):
        raise NoDeviation("reconstruction matches the demonstration")
    return float(np.asarray(phases)[int(np.argmax(d))])


def select_weighted_average(phases, distances) -> float:
    """Distance-weighted mean phase."""
    d = np.asarray(distances, dtype=float)
    total = d.sum()
    if total <= 0.0:
        raise NoDeviation("reconstruction matches the demonstration")
    return float(np.dot(d, phases) / total)


def _segment_weighted_average(phases, distances, vps: ViaPointSet, exclude) -> float:
    """Weighted phase average within the via-point segment carrying most distance."""
    phases = np.asarray(phases)
    d = np.array(distances, dtype=float)
    d[list(exclude)] = 0.0
    seg = np.clip(np.searchsorted(vps.phases, phases, side="right") - 1, 0, len(vps) - 2)
    mass = np.bincount(seg, weights=d, minlength=len(vps) - 1)
    best = int(np.argmax(mass))
    inside = seg == best
    return select_weighted_average(phases[inside], d[inside])


class _Evaluator:
    """Rolls out a prepared VMP against one demonstration."""

    def __init__(self, prepared: PreparedVmp, demo: Demonstration, alpha: float, solver: SolverConfig):
        self.prepared = prepared
        self.demo = demo
        self.alpha = alpha
        self.solver = solver

    def distances(self, vps: ViaPointSet) -> np.ndarray:
        y = self.prepared.rollout(vps, self.demo.phases)
        return per_sample_distances(self.demo.poses, y, self.alpha)

    def insert(self, vps: ViaPointSet, index: int) -> ViaPointSet | None:
        phi = float(self.demo.phases[index])
        res = self.prepared.solve_viapoint(self.demo.poses[index], phi, self.solver)
        if not res.converged:
            return None
        return vps.inserted(phi, res.pose)


def select_brute_force(
    basis: BasisConfig,
    w_o,
    vps: ViaPointSet,
    demo: Demonstration,
    alpha: float,
    solver: SolverConfig = SolverConfig(),
    exclude=(),
) -> float:
    """Interior sample phase whose via-point gives the lowest mean distance."""
    ev = _Evaluator(PreparedVmp.for_viapoints(basis, w_o, vps), demo, alpha, solver)
    idx, _ = _brute_force(ev, vps, exclude)
    if idx is None:
        raise NoDeviation("no admissible candidate phase")
    return float(demo.phases[idx])


def _brute_force(ev: _Evaluator, vps: ViaPointSet, exclude) -> tuple[int | None, float]:
    if len(ev.demo) < 3:
        raise DataError("brute-force selection needs at least 3 samples")
    best, best_cost = None, np.inf
    taken = set(np.round(vps.phases, 12))
    for i in range(1, len(ev.demo) - 1):
        if i in exclude or round(float(ev.demo.phases[i]), 12) in taken:
            continue
        cand = ev.insert(vps, i)
        if cand is None:
            continue
        cost = float(ev.distances(cand).mean())
        # near-equal costs keep the smaller phase
        if cost < best_cost - (1e-12 * best_cost + 1e-15 if best is not None else 0.0):
            best, best_cost = i, cost
    return best, best_cost


def _choose_index(strategy: str, ev: _Evaluator, vps: ViaPointSet, d: np.ndarray, exclude: set) -> int | None:
    phases = ev.demo.phases
    blocked = set(exclude)
    blocked.update(int(np.argmin(np.abs(phases - p))) for p in vps.phases)
    try:
        if strategy == "max_distance":
            phi = select_max_distance(phases, d, blocked)
        elif strategy == "weighted_average":
            phi = _segment_weighted_average(phases, d, vps, blocked)
        else:
            idx, _ = _brute_force(ev, vps, blocked)
            return idx
    except NoDeviation:
        return None
    idx = int(np.argmin(np.abs(phases - phi)))
    return None if idx in blocked else idx


def prune_viapoints(
    basis: BasisConfig,
    w_o,
    demo: Demonstration,
    vps: ViaPointSet,
    prune_epsilon: float,
    alpha: float = 0.1,
    insertion_order: list[float] | None = None,
) -> ViaPointSet:
    """Drop interior via-points whose removal barely changes the mean distance.

    Candidates are visited most recently added first (``insertion_order``
    lists phases oldest first; default is by phase).
    """
    ev = _Evaluator(PreparedVmp.for_viapoints(basis, w_o, vps), demo, alpha, SolverConfig())
    order = list(insertion_order) if insertion_order is not None else [p for p, _ in vps.interior]
    current = float(ev.distances(vps).mean())
    for phi in reversed(order):
        trial = vps.removed(phi)
        if len(trial) == len(vps):
            continue
        mean = float(ev.distances(trial).mean())
        if mean - current < prune_epsilon * (current + 1e-12):
            vps, current = trial, mean
    return vps


def greedy_detect(
    basis: BasisConfig,
    w_o,
    demo: Demonstration,
    config: DetectConfig = DetectConfig(),
    solver: SolverConfig = SolverConfig(),
    vps: ViaPointSet | None = None,
) -> DetectionResult:
    """Insert via-points until the reconstruction is within ``theta`` everywhere.

    Insertions that increase the mean distance are discarded and their phase
    is not tried again.  Redundant via-points are pruned at the end.
    """
    t0 = time.perf_counter()
    if vps is None:
        vps = ViaPointSet.from_endpoints(demo.start, demo.goal)
    ev = _Evaluator(PreparedVmp.for_viapoints(basis, w_o, vps), demo, config.alpha, solver)
    d = ev.distances(vps)
    result = DetectionResult(vps)
    result.rows.append(IterationRow(config.strategy, 0, 0, float(d.mean()), float(d.max()), 0.0, "initial"))
    blacklist: set[int] = set()
    added: list[float] = []
    iteration = 0
    while d.max() >= config.theta and len(added) < config.max_viapoints:
        iteration += 1
        idx = _choose_index(config.strategy, ev, vps, d, blacklist)
        if idx is None:
            break
        phi = float(demo.phases[idx])
        cand = ev.insert(vps, idx)
        if cand is None:
            result.failures.append((phi, "solver did not converge"))
            blacklist.add(idx)
            continue
        d_new = ev.distances(cand)
        if d_new.mean() > d.mean():
            result.failures.append((phi, "insertion increased mean distance"))
            blacklist.add(idx)
            continue
        vps, d = cand, d_new
        added.append(phi)
        result.rows.append(
            IterationRow(config.strategy, iteration, len(added), float(d.mean()), float(d.max()),
                         time.perf_counter() - t0, f"insert {phi:.4f}")
        )
    if added:
        pruned = prune_viapoints(basis, w_o, demo, vps, config.prune_epsilon, config.alpha, added)
        if len(pruned) != len(vps):
            vps = pruned
            d = ev.distances(vps)
            result.rows.append(
                IterationRow(config.strategy, iteration + 1, len(vps) - 2, float(d.mean()),
                             float(d.max()), time.perf_counter() - t0, "prune")
            )
    result.viapoints = vps
    result.duration = time.perf_counter() - t0
    log.debug("detected %d via-points in %.3fs", len(vps) - 2, result.duration)
    return result
