"""Full-pose via-point movement primitives.

A trajectory is ``y(phi) = Exp_{h(phi)}(Gamma_{h0 -> h(phi)}(Psi(phi) W))`` where
``h`` is a piecewise geodesic through the via-points and ``W`` holds one
7-dimensional weight block per basis function, expressed in the tangent
space at the start ``h0``.  Weights are stored in the tangent space at the
origin after transport and a plane rotation that maps the start-goal
direction onto a fixed reference direction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NoConvergence, NonMonotoneTime, RankDeficient
from .manifold import (
    ORIGIN,
    AlignmentRotation,
    align_hemispheres,
    dist_m,
    exp_m,
    geodesic_m,
    log_m,
    minimal_rotation,
    normalize,
    project_tangent,
    sq_dist_m,
    transport_m,
)
from .moments import MomentEstimator

POSE_DIM = 7
# reference direction d_o in the origin tangent space
REFERENCE_DIRECTION = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class BasisConfig:
    """Normalized Gaussian radial basis on ``[0, 1]`` with uniform centers."""

    k: int = 20
    width: float | None = None
    ridge: float = 1e-6

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"need at least 2 basis functions, got k={self.k}")
        if self.width is not None and self.width <= 0:
            raise ValueError("basis width must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")

    @property
    def centers(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.k)

    @property
    def h(self) -> float:
        return self.width if self.width is not None else 1.0 / (self.k - 1)

    @property
    def dim(self) -> int:
        return POSE_DIM * self.k

    def to_dict(self) -> dict:
        return {"k": self.k, "width": self.width, "ridge": self.ridge}

    @classmethod
    def from_dict(cls, d: dict) -> BasisConfig:
        return cls(k=int(d["k"]), width=d.get("width"), ridge=float(d["ridge"]))


def basis_matrix(phis, basis: BasisConfig) -> np.ndarray:
    """Activations ``psi_i(phi)``, one row per phase, rows summing to one."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    d = phis[:, None] - basis.centers[None, :]
    logits = -(d**2) / (2.0 * basis.h**2)
    logits -= logits.max(axis=1, keepdims=True)
    act = np.exp(logits)
    return act / act.sum(axis=1, keepdims=True)


def basis_row(phi: float, basis: BasisConfig) -> np.ndarray:
    return basis_matrix([phi], basis)[0]


def compute_phases(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise DataError("a demonstration needs at least 2 samples")
    bad = np.flatnonzero(np.diff(t) <= 0)
    if len(bad):
        raise NonMonotoneTime(
            f"timestamps must be strictly increasing (row {bad[0] + 2})", row=int(bad[0] + 2)
        )
    phases = (t - t[0]) / (t[-1] - t[0])
    phases[-1] = 1.0
    return phases


@dataclass(eq=False)
class Demonstration:
    """Time-stamped pose sequence with hemisphere-aligned quaternions."""

    times: np.ndarray
    poses: np.ndarray
    name: str = ""
    phases: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.poses = np.array(self.poses, dtype=float)
        if self.poses.ndim != 2 or self.poses.shape[1] != POSE_DIM:
            raise DataError(f"poses must have shape (N, 7), got {self.poses.shape}")
        if len(self.times) != len(self.poses):
            raise DataError("times and poses differ in length")
        self.phases = compute_phases(self.times)

    @classmethod
    def from_arrays(cls, times, positions, quats, name: str = "") -> Demonstration:
        quats = align_hemispheres(normalize(np.asarray(quats, dtype=float)))
        poses = np.concatenate([np.asarray(positions, dtype=float), quats], axis=1)
        return cls(np.asarray(times, dtype=float), poses, name)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def start(self) -> np.ndarray:
        return self.poses[0]

    @property
    def goal(self) -> np.ndarray:
        return self.poses[-1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.times).tobytes())
        h.update(np.ascontiguousarray(self.poses).tobytes())
        return h.hexdigest()[:16]


class ViaPointSet:
    """Ordered (phase, elementary pose) pairs including start and goal.

    Quaternions are sign-aligned: the start goes to ``w >= 0`` and every
    later via-point to the hemisphere of its predecessor.
    """

    def __init__(self, phases, poses):
        phases = np.asarray(phases, dtype=float)
        poses = np.array(poses, dtype=float).reshape(-1, POSE_DIM)
        if len(phases) != len(poses):
            raise DataError("via-point phases and poses differ in length")
        order = np.argsort(phases, kind="stable")
        phases, poses = phases[order], poses[order]
        if len(phases) < 2 or phases[0] != 0.0 or phases[-1] != 1.0:
            raise DataError("via-point set must contain phases 0 and 1")
        if np.any(np.diff(phases) <= 0):
            raise DataError("via-point phases must be strictly increasing")
        poses[:, 3:] = align_hemispheres(normalize(poses[:, 3:]))
        self.phases = phases
        self.poses = poses

    @classmethod
    def from_endpoints(cls, start, goal) -> ViaPointSet:
        return cls([0.0, 1.0], [start, goal])

    @property
    def start(self) -> np.ndarray:
        return self.poses[0]

    @property
    def goal(self) -> np.ndarray:
        return self.poses[-1]

    @property
    def interior(self) -> list[tuple[float, np.ndarray]]:
        return [(float(p), x) for p, x in zip(self.phases[1:-1], self.poses[1:-1])]

    def __len__(self) -> int:
        return len(self.phases)

    def inserted(self, phi: float, pose) -> ViaPointSet:
        if np.any(np.isclose(self.phases, phi, rtol=0.0, atol=1e-12)):
            raise DataError(f"a via-point already exists at phase {phi}")
        return ViaPointSet(np.append(self.phases, phi), np.vstack([self.poses, pose]))

    def removed(self, phi: float) -> ViaPointSet:
        keep = ~np.isclose(self.phases, phi, rtol=0.0, atol=1e-12)
        keep[0] = keep[-1] = True
        return ViaPointSet(self.phases[keep], self.poses[keep])

    def __repr__(self) -> str:
        return f"ViaPointSet(phases={self.phases.tolist()})"


# ---------------------------------------------------------------------------
# weight alignment


def alignment_rotation(h0: np.ndarray, h1: np.ndarray) -> AlignmentRotation:
    # the goal's quaternion sign must not change the frame
    h1 = np.array(h1, dtype=float)
    if np.dot(np.asarray(h0)[3:], h1[3:]) < 0.0:
        h1[3:] = -h1[3:]
    d01 = log_m(h0, h1)
    norm = np.linalg.norm(d01)
    if norm < 1e-12:
        return AlignmentRotation.identity(POSE_DIM)
    u = transport_m(h0, ORIGIN, d01 / norm)
    u = project_tangent(ORIGIN, u)
    return minimal_rotation(u / np.linalg.norm(u), REFERENCE_DIRECTION)


def align_to_origin(w_h0: np.ndarray, h0, h1) -> np.ndarray:
    """Map weight blocks from ``T_h0`` to the origin tangent space."""
    W = np.asarray(w_h0, dtype=float).reshape(-1, POSE_DIM)
    R = alignment_rotation(h0, h1)
    W_o = project_tangent(ORIGIN, R.apply(transport_m(h0, ORIGIN, W)))
    return W_o.reshape(np.shape(w_h0))


def align_from_origin(w_o: np.ndarray, h0, h1) -> np.ndarray:
    W = np.asarray(w_o, dtype=float).reshape(-1, POSE_DIM)
    R = alignment_rotation(h0, h1)
    W_h0 = project_tangent(h0, transport_m(ORIGIN, h0, R.inverse().apply(W)))
    return W_h0.reshape(np.shape(w_o))


# ---------------------------------------------------------------------------
# fitting


def fit_weights_at_start(demo: Demonstration, basis: BasisConfig) -> np.ndarray:
    """Ridge regression of the geodesic residuals, as ``(k, 7)`` blocks at ``T_h0``."""
    if len(demo) < max(2, basis.k):
        raise DataError(f"demonstration has {len(demo)} samples, need at least {max(2, basis.k)}")
    h0, h1 = demo.start, demo.goal
    phis = demo.phases
    h = geodesic_m(h0, h1, phis)
    residuals = transport_m(h, h0, log_m(h, demo.poses))
    Psi = basis_matrix(phis, basis)
    A = Psi.T @ Psi + basis.ridge * np.eye(basis.k)
    if np.linalg.cond(A) > 1e14:
        raise RankDeficient("normal equations are singular; increase ridge or samples")
    W = np.linalg.solve(A, Psi.T @ residuals)
    return project_tangent(h0, W)


def fit_weights(demo: Demonstration, basis: BasisConfig) -> np.ndarray:
    """Weight vector (length ``7k``) of one demonstration at the origin."""
    W = fit_weights_at_start(demo, basis)
    return align_to_origin(W, demo.start, demo.goal).ravel()


# ---------------------------------------------------------------------------
# execution


def elementary(phis, vps: ViaPointSet) -> np.ndarray:
    """Piecewise-geodesic elementary trajectory through the via-points."""
    scalar = np.ndim(phis) == 0
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    P = vps.poses
    seg = np.clip(np.searchsorted(vps.phases, phis, side="right") - 1, 0, len(P) - 2)
    lo, hi = vps.phases[seg], vps.phases[seg + 1]
    s = (phis - lo) / (hi - lo)
    logs = log_m(P[:-1], P[1:])
    out = exp_m(P[seg], s[:, None] * logs[seg])
    out = np.where((s == 1.0)[:, None], P[seg + 1], out)
    return out[0] if scalar else out


@dataclass(frozen=True)
class SolverConfig:
    step: float = 0.5
    shrink: float = 0.5
    grow: float = 1.2
    max_iter: int = 500
    tol: float = 1e-8
    alpha: float = 0.1

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SolverResult:
    pose: np.ndarray
    residual: float
    iterations: int
    objectives: list[float]
    converged: bool


class PreparedVmp:
    """A weight vector bound to a start and goal, ready for execution."""

    def __init__(self, basis: BasisConfig, w_o: np.ndarray, h0, h1):
        self.basis = basis
        self.h0 = np.asarray(h0, dtype=float)
        self.h1 = np.asarray(h1, dtype=float)
        self.W_h0 = align_from_origin(
            np.asarray(w_o, dtype=float).reshape(basis.k, POSE_DIM), self.h0, self.h1
        )

    @classmethod
    def for_viapoints(cls, basis: BasisConfig, w_o, vps: ViaPointSet) -> PreparedVmp:
        return cls(basis, w_o, vps.start, vps.goal)

    def modulation(self, phis) -> np.ndarray:
        """Shape modulation in ``T_h0`` at the given phases."""
        return basis_matrix(phis, self.basis) @ self.W_h0

    def rollout(self, vps: ViaPointSet, phis) -> np.ndarray:
        scalar = np.ndim(phis) == 0
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        h = elementary(phis, vps)
        f = transport_m(self.h0, h, self.modulation(phis))
        y = exp_m(h, f)
        return y[0] if scalar else y

    def execute_at(self, h_v: np.ndarray, f0: np.ndarray) -> np.ndarray:
        return exp_m(h_v, transport_m(self.h0, h_v, f0))

    def solve_viapoint(
        self, target, phi_v: float, config: SolverConfig = SolverConfig()
    ) -> SolverResult:
        """Elementary pose whose execution at ``phi_v`` hits ``target``.

        Riemannian gradient descent on the squared distance with an
        adaptive step: grown on success, shrunk and rejected on failure.
        """
        target = np.asarray(target, dtype=float)
        f0 = self.modulation([phi_v])[0]
        h = target.copy()
        y = self.execute_at(h, f0)
        obj = float(sq_dist_m(y, target))
        objectives = [obj]
        best_res = float(dist_m(y, target, config.alpha))
        step = config.step
        it = 0
        while best_res >= config.tol and it < config.max_iter:
            it += 1
            grad = transport_m(y, h, log_m(y, target))
            h_new = exp_m(h, 2.0 * step * grad)
            y_new = self.execute_at(h_new, f0)
            obj_new = float(sq_dist_m(y_new, target))
            if obj_new < obj:
                h, y, obj = h_new, y_new, obj_new
                objectives.append(obj)
                best_res = float(dist_m(y, target, config.alpha))
                step *= config.grow
            else:
                step *= config.shrink
                if step < 1e-14:
                    break
        return SolverResult(h, best_res, it, objectives, best_res < config.tol)


def rollout(basis: BasisConfig, w_o, vps: ViaPointSet, phis) -> np.ndarray:
    return PreparedVmp.for_viapoints(basis, w_o, vps).rollout(vps, phis)


def solve_elementary_viapoint(
    target,
    phi_v: float,
    basis: BasisConfig,
    w_o,
    vps: ViaPointSet,
    config: SolverConfig = SolverConfig(),
) -> np.ndarray:
    """Solve for the elementary via-point; raises ``NoConvergence`` on failure."""
    res = PreparedVmp.for_viapoints(basis, w_o, vps).solve_viapoint(target, phi_v, config)
    if not res.converged:
        raise NoConvergence(
            f"via-point solver stopped at residual {res.residual:.3g} after {res.iterations} iterations",
            best=res.pose,
            residual=res.residual,
        )
    return res.pose


@dataclass(eq=False)
class VmpModel:
    basis: BasisConfig
    weights: MomentEstimator
    id: int = 0

    def __post_init__(self) -> None:
        if self.weights.dim != self.basis.dim:
            raise DataError(f"weight dimension {self.weights.dim} != 7k = {self.basis.dim}")

    @property
    def weight_mean(self) -> np.ndarray:
        W = self.weights.mu_hat.reshape(self.basis.k, POSE_DIM)
        return project_tangent(ORIGIN, W).ravel()

    def prepare(self, vps: ViaPointSet, w_o=None) -> PreparedVmp:
        return PreparedVmp.for_viapoints(self.basis, self.weight_mean if w_o is None else w_o, vps)

    def rollout(self, vps: ViaPointSet, phis, w_o=None) -> np.ndarray:
        return self.prepare(vps, w_o).rollout(vps, phis)
