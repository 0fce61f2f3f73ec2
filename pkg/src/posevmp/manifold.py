"""Closed-form Riemannian operations on S^3 and on R^3 x S^3.

Conventions used throughout the package:

* quaternions are ``(w, x, y, z)`` arrays of shape ``(..., 4)``;
* a pose is a 7-array ``(px, py, pz, qw, qx, qy, qz)``;
* a tangent vector of the product manifold is a 7-array ``(linear[3], angular[4])``
  where the angular part is expressed in ambient R^4 coordinates and is
  orthogonal to the base quaternion.

All functions broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntipodalError

ANTIPODAL_TOL = 1e-6
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
ORIGIN = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])


@dataclass(eq=False)
class Pose:
    """A point of R^3 x S^3."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)

    @classmethod
    def from_array(cls, x) -> Pose:
        x = np.asarray(x, dtype=float)
        return cls(x[:3].copy(), x[3:7].copy())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation])

    def __repr__(self) -> str:
        p = ", ".join(f"{v:.4g}" for v in self.position)
        q = ", ".join(f"{v:.4g}" for v in self.orientation)
        return f"Pose(p=({p}), q=({q}))"


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1, keepdims=True)


def normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product ``a * b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def align_hemispheres(quats: np.ndarray) -> np.ndarray:
    """Flip signs so consecutive quaternions have non-negative inner product.

    The first quaternion is put into the ``w >= 0`` hemisphere.
    """
    q = np.array(quats, dtype=float, copy=True)
    if q[0, 0] < 0:
        q[0] = -q[0]
    for i in range(1, len(q)):
        if np.dot(q[i], q[i - 1]) < 0:
            q[i] = -q[i]
    return q


# ---------------------------------------------------------------------------
# S^3


def exp_s3(base: np.ndarray, v: np.ndarray) -> np.ndarray:
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(n > 0.0, n, 1.0)
    out = np.cos(n) * base + np.sin(n) * (v / safe)
    out = out / np.linalg.norm(out, axis=-1, keepdims=True)
    return np.where(n > 0.0, out, base)


def log_s3(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    c = np.clip(_dot(base, target), -1.0, 1.0)
    if np.any(c < -1.0 + ANTIPODAL_TOL):
        raise AntipodalError("logarithm undefined between antipodal quaternions")
    u = target - c * base
    u = u - _dot(u, base) * base
    un = np.linalg.norm(u, axis=-1, keepdims=True)
    theta = np.arctan2(un, c)
    safe = np.where(un > 0.0, un, 1.0)
    return np.where(un > 0.0, theta * u / safe, 0.0)


def transport_s3(src: np.ndarray, dst: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Parallel transport of ``v`` from ``T_src`` to ``T_dst`` along the geodesic."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    v = np.asarray(v, dtype=float)
    denom = 1.0 + _dot(src, dst)
    if np.any(denom < ANTIPODAL_TOL):
        raise AntipodalError("transport undefined between antipodal quaternions")
    return v - (_dot(dst, v) / denom) * (src + dst)


def transport_matrix_s3(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """4x4 matrix of ``transport_s3(src, dst, .)`` acting on column vectors."""
    return transport_s3(src, dst, np.eye(4)).T


def dist_s3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sign-invariant geodesic distance ``arccos(|<a, b>|)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    b = np.where(_dot(a, b) < 0.0, -b, b)
    return 2.0 * np.arctan2(
        np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1)
    )


# ---------------------------------------------------------------------------
# R^3 x S^3


def exp_m(base: np.ndarray, v: np.ndarray) -> np.ndarray:
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.concatenate(
        [base[..., :3] + v[..., :3], exp_s3(base[..., 3:], v[..., 3:])], axis=-1
    )


def log_m(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    return np.concatenate(
        [target[..., :3] - base[..., :3], log_s3(base[..., 3:], target[..., 3:])],
        axis=-1,
    )


def transport_m(src: np.ndarray, dst: np.ndarray, v: np.ndarray) -> np.ndarray:
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    v = np.asarray(v, dtype=float)
    ang = transport_s3(src[..., 3:], dst[..., 3:], v[..., 3:])
    lin = np.broadcast_to(v[..., :3], ang.shape[:-1] + (3,))
    return np.concatenate([lin, ang], axis=-1)


def geodesic_m(a: np.ndarray, b: np.ndarray, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)[..., None]
    return exp_m(a, s * log_m(a, b))


def dist_m(a: np.ndarray, b: np.ndarray, alpha: float) -> np.ndarray:
    """Position distance plus ``alpha`` times the quaternion distance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lin = np.linalg.norm(a[..., :3] - b[..., :3], axis=-1)
    if alpha == 0.0:
        return lin
    return lin + alpha * dist_s3(a[..., 3:], b[..., 3:])


def sq_dist_m(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Riemannian distance of the product metric."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lin = np.sum((a[..., :3] - b[..., :3]) ** 2, axis=-1)
    return lin + dist_s3(a[..., 3:], b[..., 3:]) ** 2


def project_tangent(base: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Remove the component of the angular part normal to the base quaternion."""
    base = np.asarray(base, dtype=float)
    v = np.array(v, dtype=float, copy=True)
    q = base[..., 3:]
    v[..., 3:] = v[..., 3:] - _dot(v[..., 3:], q) * q
    return v


# ---------------------------------------------------------------------------
# alignment rotation


@dataclass(frozen=True)
class AlignmentRotation:
    """Rotation by ``angle`` in the plane spanned by orthonormal ``e1``, ``e2``.

    Acts as the identity on the orthogonal complement of the plane.
    """

    e1: np.ndarray
    e2: np.ndarray
    angle: float
    degenerate: bool = False

    @classmethod
    def identity(cls, dim: int = 7) -> AlignmentRotation:
        z = np.zeros(dim)
        return cls(z, z, 0.0, True)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return x.copy()
        a = x @ self.e1
        b = x @ self.e2
        c, s = np.cos(self.angle), np.sin(self.angle)
        return (
            x
            + (c - 1.0) * (a[..., None] * self.e1 + b[..., None] * self.e2)
            + s * (a[..., None] * self.e2 - b[..., None] * self.e1)
        )

    def inverse(self) -> AlignmentRotation:
        return AlignmentRotation(self.e1, self.e2, -self.angle, self.degenerate)


def minimal_rotation(u: np.ndarray, v: np.ndarray, tol: float = 1e-8) -> AlignmentRotation:
    """Plane rotation taking unit vector ``u`` onto unit vector ``v``.

    Parallel or anti-parallel inputs give the identity.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(u - v) < tol or np.linalg.norm(u + v) < tol:
        return AlignmentRotation.identity(u.shape[-1])
    c = float(np.dot(u, v))
    w = v - c * u
    wn = np.linalg.norm(w)
    angle = float(np.arctan2(wn, c))
    return AlignmentRotation(u.copy(), w / wn, angle, False)
