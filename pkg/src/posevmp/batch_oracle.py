"""Batch reference estimators used to check the incremental path.

These store every sample on purpose; they exist so that the incremental
estimators can be compared against textbook batch results.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ModeCountMismatch, NoConvergence, TooFewSamples
from .manifold import exp_s3, log_s3
from .vmp import POSE_DIM, BasisConfig, Demonstration, fit_weights


def batch_gaussian(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and unbiased covariance."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(X) < 2:
        raise TooFewSamples(f"covariance needs at least 2 samples, got {len(X)}")
    mean = X.mean(axis=0)
    D = X - mean
    return mean, D.T @ D / (len(X) - 1)


def batch_mean(samples) -> np.ndarray:
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(X) < 1:
        raise TooFewSamples("mean needs at least 1 sample")
    return X.mean(axis=0)


def batch_frechet_mean(quats, tol: float = 1e-12, max_iter: int = 1000) -> np.ndarray:
    """Fréchet mean on S^3 by fixed-point iteration of tangent averages.

    Quaternions are sign-aligned with the first one before averaging.
    """
    Q = np.atleast_2d(np.asarray(quats, dtype=float)).copy()
    Q[Q @ Q[0] < 0] *= -1
    q = Q[0]
    for _ in range(max_iter):
        step = log_s3(q, Q).mean(axis=0)
        q = exp_s3(q, step)
        if np.linalg.norm(step) < tol:
            return q
    raise NoConvergence(f"Fréchet mean did not converge in {max_iter} iterations", best=q)


@dataclass
class BatchFit:
    weights: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray | None


def batch_fit_library(
    groups: Mapping[str, Sequence[Demonstration]], basis: BasisConfig
) -> dict[str, BatchFit]:
    """Fit every demonstration and estimate a Gaussian per group."""
    out = {}
    for name, demos in groups.items():
        W = np.array([fit_weights(d, basis) for d in demos])
        cov = batch_gaussian(W)[1] if len(W) >= 2 else None
        out[name] = BatchFit(W, batch_mean(W), cov)
    return out


@dataclass
class ComparisonRow:
    operation: str
    translation: float
    rotation_deg: float
    translation_rel: float
    rotation_rel: float


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def as_dicts(self) -> list[dict]:
        return [dict(r.__dict__) for r in self.rows]

    def render(self, length_unit: str = "m") -> str:
        header = ("Operation", f"Translation [{length_unit}]", "Rotation [deg]", "Rel. transl.", "Rel. rot.")
        body = [
            (r.operation, f"{r.translation:.3e}", f"{r.rotation_deg:.3e}",
             f"{r.translation_rel:.3e}", f"{r.rotation_rel:.3e}")
            for r in self.rows
        ]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header, *body]]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _block_rms(diff: np.ndarray) -> tuple[float, float]:
    B = np.asarray(diff, dtype=float).reshape(-1, POSE_DIM)
    lin = float(np.sqrt(np.mean(np.sum(B[:, :3] ** 2, axis=1))))
    ang = float(np.sqrt(np.mean(np.sum(B[:, 3:] ** 2, axis=1))))
    return lin, ang


def compare_means(operation: str, incremental: np.ndarray, batch: np.ndarray) -> ComparisonRow:
    """RMS over basis blocks of the translation and rotation parts of the difference.

    Rotation blocks are quaternion tangent norms converted from radians to
    degrees.  Relative values divide by the RMS block norm of ``batch``.
    """
    lin, ang = _block_rms(np.asarray(incremental) - np.asarray(batch))
    ref_lin, ref_ang = _block_rms(batch)
    return ComparisonRow(
        operation,
        lin,
        float(np.degrees(ang)),
        lin / ref_lin if ref_lin > 0 else lin,
        ang / ref_ang if ref_ang > 0 else ang,
    )


def compare(
    library,
    batch_results: Mapping[str, BatchFit | np.ndarray],
    correspondence: Mapping[str, int],
    metadata: dict | None = None,
) -> ComparisonReport:
    """Compare library weight means with batch means, one row per named mode."""
    if set(correspondence) != set(batch_results):
        raise ModeCountMismatch(
            f"{len(correspondence)} library modes given for {len(batch_results)} batch results"
        )
    report = ComparisonReport(metadata=dict(metadata or {}))
    for name, mp_id in correspondence.items():
        ref = batch_results[name]
        ref_mean = ref.mean if isinstance(ref, BatchFit) else np.asarray(ref)
        report.rows.append(compare_means(name, library.get(mp_id).model.weights.mu_hat, ref_mean))
    return report
