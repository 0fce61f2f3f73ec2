"""Incremental task-parameter estimation: start, goal, via-points, duration.

Orientations use a recursive Fréchet mean on S^3.  Their covariance is kept
as tangent-space moments at the current mean; when the mean moves, the
moments are re-centred on the new mean and parallel-transported into its
tangent space before the next sample is accumulated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifold import exp_s3, log_s3, transport_matrix_s3
from .moments import MomentEstimator, merge as merge_moments


def _shift_and_transport(mom: MomentEstimator, base: np.ndarray, new_base: np.ndarray) -> MomentEstimator:
    delta = log_s3(base, new_base)
    mu = mom.mu_hat - delta
    S = mom.S_hat - np.outer(mom.mu_hat, delta) - np.outer(delta, mom.mu_hat) + np.outer(delta, delta)
    P = transport_matrix_s3(base, new_base)
    S = P @ S @ P.T
    return MomentEstimator(mom.n, P @ mu, 0.5 * (S + S.T))


def _same_hemisphere(ref: np.ndarray, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return -q if np.dot(ref, q) < 0 else q


@dataclass(eq=False)
class FrechetEstimator:
    mean: np.ndarray
    moments: MomentEstimator

    @property
    def n(self) -> float:
        return self.moments.n

    @classmethod
    def from_sample(cls, q) -> FrechetEstimator:
        q = np.asarray(q, dtype=float)
        return cls(q.copy(), MomentEstimator(1, np.zeros(4), np.zeros((4, 4))))

    def update(self, q) -> FrechetEstimator:
        q = _same_hemisphere(self.mean, q)
        n = self.n
        new_mean = exp_s3(self.mean, log_s3(self.mean, q) / (n + 1))
        mom = _shift_and_transport(self.moments, self.mean, new_mean)
        return FrechetEstimator(new_mean, mom.update(log_s3(new_mean, q)))

    def covariance(self) -> np.ndarray:
        """Tangent covariance at the mean, in ambient R^4 coordinates."""
        C = self.moments.covariance()
        P = np.eye(4) - np.outer(self.mean, self.mean)
        C = P @ C @ P
        return 0.5 * (C + C.T)

    def with_count(self, n: float) -> FrechetEstimator:
        return FrechetEstimator(self.mean.copy(), self.moments.with_count(n))


def frechet_update(est: FrechetEstimator, q) -> FrechetEstimator:
    return est.update(q)


def merge_frechet(a: FrechetEstimator, b: FrechetEstimator) -> FrechetEstimator:
    """Single weighted geodesic step from ``a`` towards ``b`` (approximate)."""
    flip = np.dot(a.mean, b.mean) < 0
    qb = -b.mean if flip else b.mean
    mb = b.moments
    if flip:
        # tangent vectors at -q are the negated ones at q
        mb = MomentEstimator(mb.n, -mb.mu_hat, mb.S_hat)
    n = a.n + b.n
    mean = exp_s3(a.mean, (b.n / n) * log_s3(a.mean, qb))
    ma = _shift_and_transport(a.moments, a.mean, mean)
    mb = _shift_and_transport(mb, qb, mean)
    return FrechetEstimator(mean, merge_moments(ma, mb))


@dataclass(eq=False)
class PoseEstimator:
    position: MomentEstimator
    orientation: FrechetEstimator

    @property
    def n(self) -> float:
        return self.position.n

    @classmethod
    def from_pose(cls, pose) -> PoseEstimator:
        pose = np.asarray(pose, dtype=float)
        return cls(MomentEstimator.from_sample(pose[:3]), FrechetEstimator.from_sample(pose[3:]))

    def update(self, pose) -> PoseEstimator:
        pose = np.asarray(pose, dtype=float)
        return PoseEstimator(self.position.update(pose[:3]), self.orientation.update(pose[3:]))

    def merge(self, other: PoseEstimator) -> PoseEstimator:
        return PoseEstimator(
            merge_moments(self.position, other.position),
            merge_frechet(self.orientation, other.orientation),
        )

    def with_count(self, n: float) -> PoseEstimator:
        return PoseEstimator(self.position.with_count(n), self.orientation.with_count(n))

    @property
    def mean(self) -> np.ndarray:
        return np.concatenate([self.position.mu_hat, self.orientation.mean])


@dataclass(eq=False)
class ViaPointSlot:
    phase: MomentEstimator
    pose: PoseEstimator

    @classmethod
    def from_detection(cls, phi: float, pose) -> ViaPointSlot:
        return cls(MomentEstimator.from_sample([phi]), PoseEstimator.from_pose(pose))

    @property
    def n(self) -> float:
        return self.phase.n

    @property
    def phase_mean(self) -> float:
        return float(self.phase.mu_hat[0])

    def update(self, phi: float, pose) -> ViaPointSlot:
        return ViaPointSlot(self.phase.update([phi]), self.pose.update(pose))

    def merge(self, other: ViaPointSlot) -> ViaPointSlot:
        return ViaPointSlot(merge_moments(self.phase, other.phase), self.pose.merge(other.pose))

    def with_count(self, n: float) -> ViaPointSlot:
        return ViaPointSlot(self.phase.with_count(n), self.pose.with_count(n))


def match_slots(phases: list[float], detections: list[float], window: float) -> list[int | None]:
    """Nearest-phase slot index for each detection, ``None`` if none within ``window``.

    Each slot takes at most one detection.
    """
    used: set[int] = set()
    out: list[int | None] = []
    for phi in detections:
        best, best_gap = None, window
        for i, p in enumerate(phases):
            gap = abs(p - phi)
            if i not in used and gap <= best_gap:
                best, best_gap = i, gap
        if best is not None:
            used.add(best)
        out.append(best)
    return out


@dataclass(eq=False)
class TaskModel:
    start: PoseEstimator
    goal: PoseEstimator
    duration: MomentEstimator
    slots: list[ViaPointSlot] = field(default_factory=list)

    @classmethod
    def from_demo(cls, start, goal, duration: float, viapoints=()) -> TaskModel:
        return cls(
            PoseEstimator.from_pose(start),
            PoseEstimator.from_pose(goal),
            MomentEstimator.from_sample([duration]),
            [ViaPointSlot.from_detection(p, y) for p, y in viapoints],
        )

    def update(self, start, goal, duration: float, viapoints=(), window: float = 0.1) -> TaskModel:
        viapoints = list(viapoints)
        slots = list(self.slots)
        matches = match_slots([s.phase_mean for s in slots], [p for p, _ in viapoints], window)
        for (phi, pose), idx in zip(viapoints, matches):
            if idx is None:
                slots.append(ViaPointSlot.from_detection(phi, pose))
            else:
                slots[idx] = slots[idx].update(phi, pose)
        return TaskModel(self.start.update(start), self.goal.update(goal),
                         self.duration.update([duration]), slots)

    def merge(self, other: TaskModel, window: float = 0.1) -> TaskModel:
        slots = list(self.slots)
        extra = []
        matches = match_slots([s.phase_mean for s in slots], [s.phase_mean for s in other.slots], window)
        for slot, idx in zip(other.slots, matches):
            if idx is None:
                extra.append(slot)
            else:
                slots[idx] = slots[idx].merge(slot)
        return TaskModel(self.start.merge(other.start), self.goal.merge(other.goal),
                         merge_moments(self.duration, other.duration), slots + extra)

    def with_count_factor(self, factor: float) -> TaskModel:
        def reduce(est):
            return est.with_count(max(1, est.n * factor))

        return TaskModel(reduce(self.start), reduce(self.goal), reduce(self.duration),
                         [reduce(s) for s in self.slots])

    def viapoint_targets(self) -> list[tuple[float, np.ndarray]]:
        """Mean via-point (phase, pose) pairs, phases clamped into (0, 1), sorted."""
        out = []
        for s in self.slots:
            phi = float(np.clip(s.phase_mean, 1e-6, 1.0 - 1e-6))
            out.append((phi, s.pose.mean))
        out.sort(key=lambda t: t[0])
        return out

    @property
    def mean_duration(self) -> float:
        return max(float(self.duration.mu_hat[0]), 1e-9)
