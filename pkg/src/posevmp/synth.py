"""Seeded synthetic demonstration families at desk scale (meters, radians)."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .manifold import IDENTITY_QUAT, exp_s3, geodesic_m, normalize, quat_multiply
from .vmp import Demonstration

FAMILIES = ("geodesic", "smooth", "single-bump", "pouring", "bimodal")

# shape(phi, rng-drawn params) -> (position offset (N,3), body rotation vector (N,3))
Shape = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def rotvec_to_quat(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    tangent = np.concatenate([np.zeros(r.shape[:-1] + (1,)), 0.5 * r], axis=-1)
    return exp_s3(np.broadcast_to(IDENTITY_QUAT, tangent.shape), tangent)


def _bump(phi: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-((phi - center) ** 2) / (2.0 * width**2))


def _plateau(phi: np.ndarray, rise: tuple[float, float], fall: tuple[float, float]) -> np.ndarray:
    def smoothstep(x):
        x = np.clip(x, 0.0, 1.0)
        return x * x * x * (x * (6.0 * x - 15.0) + 10.0)

    up = smoothstep((phi - rise[0]) / (rise[1] - rise[0]))
    down = 1.0 - smoothstep((phi - fall[0]) / (fall[1] - fall[0]))
    return up * down


class Scene:
    """Nominal start and goal shared by one family of demonstrations."""

    def __init__(self, rng: np.random.Generator):
        self.p0 = np.array([0.4, 0.0, 0.1]) + rng.normal(0.0, 0.03, 3)
        self.p1 = self.p0 + np.array([0.15, 0.25, 0.05]) + rng.normal(0.0, 0.03, 3)
        self.q0 = normalize(rng.normal(size=4))
        if self.q0[0] < 0:
            self.q0 = -self.q0
        axis = normalize(rng.normal(size=3))
        self.q1 = quat_multiply(self.q0, rotvec_to_quat(0.6 * axis))

    def endpoints(self, rng: np.random.Generator, jitter: float) -> tuple[np.ndarray, np.ndarray]:
        ends = []
        for p, q in ((self.p0, self.q0), (self.p1, self.q1)):
            p = p + rng.normal(0.0, jitter, 3)
            q = quat_multiply(q, rotvec_to_quat(rng.normal(0.0, 2.0 * jitter, 3)))
            ends.append(np.concatenate([p, q]))
        return ends[0], ends[1]


def make_demo(
    rng: np.random.Generator,
    scene: Scene,
    shape: Shape | None,
    samples: int = 100,
    jitter: float = 0.01,
    name: str = "",
) -> Demonstration:
    """Geodesic between jittered endpoints, deformed by ``shape`` in the body frame."""
    h0, h1 = scene.endpoints(rng, jitter)
    duration = 2.0 + rng.uniform(-0.2, 0.2)
    times = np.linspace(0.0, duration, samples) + rng.uniform(0.0, 5.0)
    phi = np.linspace(0.0, 1.0, samples)
    h = geodesic_m(h0, h1, phi)
    pos, quat = h[:, :3], h[:, 3:]
    if shape is not None:
        dp, rv = shape(phi)
        pos = pos + dp
        quat = quat_multiply(quat, rotvec_to_quat(rv))
    return Demonstration.from_arrays(times, pos, quat, name=name)


def smooth_shape(rng: np.random.Generator) -> Shape:
    a = rng.uniform(0.03, 0.06)
    b = rng.uniform(0.2, 0.4)

    def shape(phi):
        s = np.sin(np.pi * phi)
        dp = np.stack([0.3 * a * s * np.cos(np.pi * phi), a * s, 0.5 * a * s**2], axis=1)
        rv = np.stack([b * s, 0.5 * b * np.sin(2 * np.pi * phi), 0.2 * b * s], axis=1)
        return dp, rv

    return shape


def single_bump_shape(rng: np.random.Generator) -> Shape:
    center = rng.uniform(0.45, 0.55)
    height = rng.uniform(0.06, 0.1)
    tilt = rng.uniform(0.2, 0.4)

    def shape(phi):
        g = _bump(phi, center, 0.08)
        dp = np.stack([np.zeros_like(g), 0.2 * height * g, height * g], axis=1)
        rv = np.stack([tilt * g, np.zeros_like(g), np.zeros_like(g)], axis=1)
        return dp, rv

    return shape


def pouring_shape(rng: np.random.Generator) -> Shape:
    """Lift, tilt, hold, untilt, lower; amplitudes vary strongly between demos."""
    amp = rng.uniform(0.3, 1.7)
    lift = 0.12 * amp
    tilt = 1.0 * amp
    shift = rng.uniform(-0.01, 0.01)

    def shape(phi):
        lifted = _plateau(phi, (0.0 + shift, 0.35 + shift), (0.65 + shift, 1.0 + shift))
        tilted = _plateau(phi, (0.2 + shift, 0.4 + shift), (0.6 + shift, 0.8 + shift))
        dp = np.stack([0.3 * lift * lifted, np.zeros_like(phi), lift * lifted], axis=1)
        rv = np.stack([tilt * tilted, np.zeros_like(phi), np.zeros_like(phi)], axis=1)
        return dp, rv

    return shape


def bimodal_shape(rng: np.random.Generator, mode: int) -> Shape:
    """Two families that differ in lateral (y) offset and rotation about z."""
    sign = 1.0 if mode == 0 else -1.0
    amp = rng.uniform(0.85, 1.15)
    center = 0.5 + rng.uniform(-0.03, 0.03)

    def shape(phi):
        g = _bump(phi, center, 0.15)
        dp = np.stack([np.zeros_like(g), sign * 0.08 * amp * g, 0.02 * amp * g], axis=1)
        rv = np.stack([np.zeros_like(g), np.zeros_like(g), sign * 0.5 * amp * g], axis=1)
        return dp, rv

    return shape


def generate(
    family: str, count: int, seed: int, samples: int = 100, jitter: float = 0.01
) -> list[Demonstration]:
    """``count`` demonstrations of one family sharing a seeded scene.

    For ``bimodal`` the modes alternate (A, B, A, ...) and are encoded in the
    demonstration names.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    rng = np.random.default_rng(seed)
    scene = Scene(rng)
    demos = []
    for i in range(count):
        name = f"{family}-{i:03d}"
        if family == "geodesic":
            shape = None
        elif family == "smooth":
            shape = smooth_shape(rng)
        elif family == "single-bump":
            shape = single_bump_shape(rng)
        elif family == "pouring":
            shape = pouring_shape(rng)
        else:
            mode = i % 2
            shape = bimodal_shape(rng, mode)
            name = f"bimodal-{'AB'[mode]}-{i:03d}"
        demos.append(make_demo(rng, scene, shape, samples, jitter, name))
    return demos


def bimodal_stream(
    seed: int, modes: list[int], samples: int = 100, jitter: float = 0.01
) -> list[Demonstration]:
    """Demonstrations of the two bimodal families in the given mode order."""
    rng = np.random.default_rng(seed)
    scene = Scene(rng)
    return [
        make_demo(rng, scene, bimodal_shape(rng, m), samples, jitter, f"bimodal-{'AB'[m]}-{i:03d}")
        for i, m in enumerate(modes)
    ]
