"""Normalized two-dimensional Gaussians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Gaussian2D:
    """Normalized Gaussian density with the given mean and covariance.

    ``g(x) = exp(-(x-mean)^T cov^{-1} (x-mean) / 2) / (2 pi sqrt(det cov))``
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        cov = _frozen(0.5 * (cov + cov.T))
        if not np.all(np.isfinite(cov)) or np.linalg.eigvalsh(cov)[0] <= 0:
            raise InvalidSpecError(f"Gaussian covariance must be positive definite, got {cov.tolist()}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def centered(cls, cov) -> "Gaussian2D":
        return cls(np.zeros(2), cov)

    @property
    def precision(self) -> np.ndarray:
        return np.linalg.inv(self.cov)

    @property
    def peak(self) -> float:
        return 1.0 / (2.0 * np.pi * np.sqrt(np.linalg.det(self.cov)))

    def __call__(self, x) -> np.ndarray:
        """Density at points ``x`` of shape ``(..., 2)``."""
        d = np.asarray(x, dtype=float) - self.mean
        P = self.precision
        quad = P[0, 0] * d[..., 0] ** 2 + 2 * P[0, 1] * d[..., 0] * d[..., 1] + P[1, 1] * d[..., 1] ** 2
        return self.peak * np.exp(-0.5 * quad)

    def mass_in(self, window) -> float:
        """Probability mass inside an axis-aligned window (q_min, q_max, p_min, p_max).

        Exact for diagonal covariance; for correlated covariances a lower bound obtained
        from the enclosed axis-aligned ellipse is returned.
        """
        q0, q1, p0, p1 = window
        from scipy.special import erf
        from scipy.stats import chi2

        if abs(self.cov[0, 1]) < 1e-15 * np.sqrt(self.cov[0, 0] * self.cov[1, 1]):
            sq, sp = np.sqrt(self.cov[0, 0]), np.sqrt(self.cov[1, 1])
            mq = 0.5 * (erf((q1 - self.mean[0]) / (np.sqrt(2) * sq)) - erf((q0 - self.mean[0]) / (np.sqrt(2) * sq)))
            mp = 0.5 * (erf((p1 - self.mean[1]) / (np.sqrt(2) * sp)) - erf((p0 - self.mean[1]) / (np.sqrt(2) * sp)))
            return float(mq * mp)
        # largest Mahalanobis ball around the mean that fits in the window
        half = np.array([
            min(self.mean[0] - q0, q1 - self.mean[0]),
            min(self.mean[1] - p0, p1 - self.mean[1]),
        ])
        if np.any(half <= 0):
            return 0.0
        r2 = float(np.min(half ** 2 / np.diag(self.cov)))
        return float(chi2.cdf(r2, df=2))
