import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from posevmp.synth import generate
from posevmp.vmp import BasisConfig, Demonstration

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def quat_about(axis, angle):
    axis = unit(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def random_quat(rng):
    return unit(rng.normal(size=4))


def random_tangent_s3(rng, q, max_norm=np.pi - 0.1):
    v = rng.normal(size=4)
    v -= (v @ q) * q
    return unit(v) * rng.uniform(0.0, max_norm)


def random_pose(rng, spread=0.5):
    q = random_quat(rng)
    if q[0] < 0:
        q = -q
    return np.concatenate([rng.normal(scale=spread, size=3), q])


finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@st.composite
def quaternions(draw):
    v = np.array(draw(st.lists(finite, min_size=4, max_size=4)))
    n = np.linalg.norm(v)
    if n < 0.1:
        v = np.array([1.0, 0.0, 0.0, 0.0])
        n = 1.0
    return v / n


@st.composite
def tangents(draw, q, max_norm=np.pi - 0.1):
    v = np.array(draw(st.lists(finite, min_size=4, max_size=4)))
    v = v - (v @ q) * q
    n = np.linalg.norm(v)
    if n < 1e-6:
        return np.zeros(4)
    scale = draw(st.floats(0.0, max_norm))
    return v / n * scale


def euclidean_demo(positions, times=None, q=(1.0, 0.0, 0.0, 0.0)):
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    times = np.linspace(0.0, 1.0, n) if times is None else times
    quats = np.tile(np.asarray(q, dtype=float), (n, 1))
    return Demonstration.from_arrays(times, positions, quats)


# -- Euclidean oracle -----------------------------------------------------------------


def oracle_basis(phis, k):
    c = np.linspace(0, 1, k)
    h = 1.0 / (k - 1)
    g = np.exp(-((np.asarray(phis)[:, None] - c) ** 2) / (2 * h * h))
    return g / g.sum(axis=1, keepdims=True)


def oracle_fit(phis, positions, k, ridge=1e-6):
    """Ridge regression of positions minus the straight start-goal line."""
    line = positions[0] + np.outer(phis, positions[-1] - positions[0])
    Psi = oracle_basis(phis, k)
    return np.linalg.solve(Psi.T @ Psi + ridge * np.eye(k), Psi.T @ (positions - line))


def oracle_rollout(phis, W, vp_phases, vp_positions, k):
    """Piecewise-linear elementary trajectory plus the basis modulation."""
    h = np.stack([np.interp(phis, vp_phases, vp_positions[:, j]) for j in range(3)], axis=1)
    return h + oracle_basis(phis, k) @ W


def wavy_positions(n, rng):
    phi = np.linspace(0, 1, n)
    p0, p1 = rng.normal(size=3), rng.normal(size=3)
    bump = np.stack([np.sin(np.pi * phi), 0.5 * np.sin(2 * np.pi * phi), phi**2 * (1 - phi)], axis=1)
    return p0 + np.outer(phi, p1 - p0) + 0.1 * bump


@pytest.fixture(scope="session")
def basis():
    return BasisConfig()


@pytest.fixture(scope="session")
def smooth_demos():
    return generate("smooth", 9, seed=11)


@pytest.fixture(scope="session")
def pouring_demos():
    return generate("pouring", 9, seed=3)
