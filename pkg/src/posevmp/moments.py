"""Bounded-memory Gaussian estimation from non-central moments.

An estimator keeps the sample count ``n`` together with the first and second
non-central moments ``mu_hat = E[x]`` and ``S_hat = E[x x^T]``.  Adding,
improving and merging are exact with respect to batch estimation over the
union of all samples seen; splitting relies on assumptions and is not.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSplit, DimensionMismatch, UndefinedEstimate

SPLIT_EPS = 1e-8


@dataclass(eq=False)
class MomentEstimator:
    n: float
    mu_hat: np.ndarray
    S_hat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mu_hat.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.mu_hat

    @classmethod
    def from_sample(cls, x) -> MomentEstimator:
        x = np.array(x, dtype=float, ndmin=1)
        return cls(1, x, np.outer(x, x))

    def copy(self) -> MomentEstimator:
        return MomentEstimator(self.n, self.mu_hat.copy(), self.S_hat.copy())

    def update(self, x) -> MomentEstimator:
        """Return the estimator after observing one more sample."""
        x = np.array(x, dtype=float, ndmin=1)
        if x.shape != self.mu_hat.shape:
            raise DimensionMismatch(f"sample has shape {x.shape}, expected {self.mu_hat.shape}")
        n = self.n
        mu = (n * self.mu_hat + x) / (n + 1)
        S = (n * self.S_hat + np.outer(x, x)) / (n + 1)
        return MomentEstimator(n + 1, mu, _sym(S))

    def covariance(self) -> np.ndarray:
        if self.n < 2:
            raise UndefinedEstimate(f"covariance needs n >= 2 samples, have n={self.n}")
        n = self.n
        return _sym(n / (n - 1) * (self.S_hat - np.outer(self.mu_hat, self.mu_hat)))

    def with_count(self, n: float) -> MomentEstimator:
        return MomentEstimator(n, self.mu_hat.copy(), self.S_hat.copy())


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def init_from_sample(x) -> MomentEstimator:
    return MomentEstimator.from_sample(x)


def update(est: MomentEstimator, x) -> MomentEstimator:
    return est.update(x)


def covariance(est: MomentEstimator) -> np.ndarray:
    return est.covariance()


def merge(a: MomentEstimator, b: MomentEstimator) -> MomentEstimator:
    """Joint estimator of two sample sets, weighting moments by counts."""
    if a.mu_hat.shape != b.mu_hat.shape:
        raise DimensionMismatch(f"cannot merge dimensions {a.dim} and {b.dim}")
    n = a.n + b.n
    wa, wb = a.n / n, b.n / n
    return MomentEstimator(
        n, wa * a.mu_hat + wb * b.mu_hat, _sym(wa * a.S_hat + wb * b.S_hat)
    )


def from_mean_cov(n: float, mean: np.ndarray, cov: np.ndarray) -> MomentEstimator:
    """Invert the covariance formula to recover the second moment."""
    mean = np.asarray(mean, dtype=float)
    S = (n - 1) / n * np.asarray(cov, dtype=float) + np.outer(mean, mean)
    return MomentEstimator(n, mean.copy(), _sym(S))


def split(
    c: MomentEstimator, x, count_factor: float = 0.5
) -> tuple[MomentEstimator, MomentEstimator]:
    """Split one mode into two, assuming ``x`` typifies the first.

    Both children get half of the parent's count and an isotropic covariance
    with standard deviation a third of the distance between their means.
    The second moments are derived with that half count; afterwards each
    count is multiplied by ``count_factor`` (floored at 1).
    """
    if c.n < 2:
        raise UndefinedEstimate(f"split needs n >= 2, have n={c.n}")
    x = np.array(x, dtype=float, ndmin=1)
    if x.shape != c.mu_hat.shape:
        raise DimensionMismatch(f"sample has shape {x.shape}, expected {c.mu_hat.shape}")
    mu_a = x.copy()
    mu_b = 2.0 * c.mu_hat - mu_a
    gap = np.linalg.norm(mu_a - mu_b)
    if gap < 1e-9:
        warnings.warn("split with coincident child means", DegenerateSplit, stacklevel=2)
        var = SPLIT_EPS
    else:
        var = (gap / 3.0) ** 2
    cov = var * np.eye(c.dim)
    half = c.n / 2
    a = from_mean_cov(half, mu_a, cov)
    b = from_mean_cov(half, mu_b, cov)
    n_final = max(1.0, half * count_factor)
    if n_final == int(n_final):
        n_final = int(n_final)
    return a.with_count(n_final), b.with_count(n_final)
