"""Gaussian stochastic-function surrogate.

Correlation kernels, the correlation matrix over observed points, the
conditional mean / variance of the model given the observations, and the
two parameter estimators (sample moments and maximum likelihood).  Both
estimators are affine equivariant: scaling the observed values by
``a*y + b`` maps the mean estimate to ``a*mu + b`` and the variance
estimate to ``a**2 * sigma2``, which is what makes the acquisition
criteria built on top of this module scale invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import (
    DuplicatePointsError,
    IllConditionedModelError,
    InsufficientDataError,
)

# Minimum pairwise distance (max-norm) between history points.
DUPLICATE_THRESHOLD = 1e-12

# Raw conditional variances in [-VARIANCE_CLAMP_TOL * sigma2, 0) clamp
# silently to zero; anything more negative is flagged.
VARIANCE_CLAMP_TOL = 1e-10

_JITTER_START = 1e-12
_JITTER_MAX = 1e-6


@dataclass(frozen=True)
class EvaluationHistory:
    """Observed pairs (x_i, y_i) inside a feasible hyper-rectangle."""

    lower: np.ndarray
    upper: np.ndarray
    points: np.ndarray  # shape (n, d)
    values: np.ndarray  # shape (n,)

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower/upper must be 1-d arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("region bounds must satisfy lower < upper")
        if points.ndim != 2 or points.shape[1] != lower.size:
            raise ValueError("points must have shape (n, d)")
        if values.shape != (points.shape[0],):
            raise ValueError("values must have one entry per point")
        if points.shape[0] < 1:
            raise ValueError("history needs at least one observation")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(values))):
            raise ValueError("points and values must be finite")
        if np.any(points < lower - 1e-12) or np.any(points > upper + 1e-12):
            raise ValueError("history points must lie inside the region")
        _check_distinct(points)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_observation(self, point, value) -> "EvaluationHistory":
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return EvaluationHistory(
            self.lower,
            self.upper,
            np.vstack([self.points, point[None, :]]),
            np.append(self.values, float(value)),
        )


def _check_distinct(points: np.ndarray) -> None:
    n = points.shape[0]
    if n < 2:
        return
    diff = np.abs(points[:, None, :] - points[None, :, :]).max(axis=2)
    diff[np.diag_indices(n)] = np.inf
    if diff.min() <= DUPLICATE_THRESHOLD:
        i, j = np.unravel_index(np.argmin(diff), diff.shape)
        raise DuplicatePointsError(
            f"points {i} and {j} are closer than {DUPLICATE_THRESHOLD} (max-norm)"
        )


@dataclass(frozen=True)
class CorrelationKernel:
    """Stationary correlation function rho(x, x')."""

    family: str = "exponential"  # or "squared-exponential"
    c: float = 5.0

    def __post_init__(self):
        if self.family not in ("exponential", "squared-exponential"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (self.c > 0):
            raise ValueError("decay rate c must be positive")

    def of_distance(self, r):
        """Correlation as a function of the Euclidean distance r >= 0."""
        r = np.asarray(r, dtype=float)
        if self.family == "exponential":
            return np.exp(-self.c * r)
        return np.exp(-self.c * r * r)

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self.of_distance(np.linalg.norm(x1 - x2))


@dataclass(frozen=True)
class ModelParameters:
    """Estimated prior mean and variance, tagged with the estimator used."""

    mu: float
    sigma2: float
    estimator_tag: str

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


class Moments(NamedTuple):
    mean: float
    variance: float
    clamped: bool  # raw variance was below -VARIANCE_CLAMP_TOL * sigma2


def _cross_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))


def correlation_matrix(history: EvaluationHistory, kernel: CorrelationKernel) -> np.ndarray:
    """The n x n matrix of pairwise correlations between history points."""
    d = _cross_distances(history.points, history.points)
    sigma = kernel.of_distance(d)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def estimate_sample(history: EvaluationHistory) -> ModelParameters:
    """Plain sample mean and unbiased sample variance of the observed values."""
    y = history.values
    if y.size < 2:
        raise InsufficientDataError("sample variance needs at least two observations")
    return ModelParameters(float(y.mean()), float(y.var(ddof=1)), "sample")


def _factor_with_jitter(sigma: np.ndarray):
    """Cholesky of sigma, escalating diagonal jitter until it succeeds."""
    jitter = 0.0
    while True:
        try:
            factor = cho_factor(sigma + jitter * np.eye(sigma.shape[0]), lower=True)
            return factor, jitter
        except LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_MAX:
                raise IllConditionedModelError(
                    f"correlation matrix not factorizable with jitter up to {_JITTER_MAX}"
                ) from None


def estimate_mle(history: EvaluationHistory, kernel: CorrelationKernel) -> ModelParameters:
    """Maximum likelihood estimates of (mu, sigma2) under the correlated model.

    The mean is the generalized-least-squares value
    ``(1' S^-1 y) / (1' S^-1 1)`` and the variance the averaged
    S-weighted residual quadratic form, both computed through the
    triangular factor of the correlation matrix.
    """
    y = history.values
    if y.size == 1:
        return ModelParameters(float(y[0]), 0.0, "mle")
    sigma = correlation_matrix(history, kernel)
    factor, _ = _factor_with_jitter(sigma)
    ones = np.ones_like(y)
    s_inv_ones = cho_solve(factor, ones)
    mu = float(s_inv_ones @ y) / float(s_inv_ones @ ones)
    resid = y - mu
    sigma2 = float(resid @ cho_solve(factor, resid)) / y.size
    return ModelParameters(mu, max(sigma2, 0.0), "mle")


def estimate(history: EvaluationHistory, kernel: CorrelationKernel, tag: str) -> ModelParameters:
    if tag == "sample":
        return estimate_sample(history)
    if tag == "mle":
        return estimate_mle(history, kernel)
    raise ValueError(f"unknown estimator tag {tag!r}")


class SurrogatePosterior:
    """Conditional Gaussian model given an evaluation history.

    Immutable after construction; moment queries are read-only and safe
    to share across threads.
    """

    def __init__(self, history: EvaluationHistory, kernel: CorrelationKernel,
                 parameters: ModelParameters):
        self.history = history
        self.kernel = kernel
        self.parameters = parameters
        sigma = correlation_matrix(history, kernel)
        self._factor, self.jitter = _factor_with_jitter(sigma)
        # Premultiplied residual weights: (y - mu)' S^-1
        self._resid_weights = cho_solve(self._factor, history.values - parameters.mu)

    def correlation_row(self, x) -> np.ndarray:
        """Correlations (rho(x_1, x), ..., rho(x_n, x)) for a query point."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = np.linalg.norm(self.history.points - x[None, :], axis=1)
        return self.kernel.of_distance(d)

    def conditional_moments(self, x) -> Moments:
        """Conditional mean and variance of the model at x."""
        ups = self.correlation_row(x)
        m = self.parameters.mu + float(self._resid_weights @ ups)
        raw = 1.0 - float(ups @ cho_solve(self._factor, ups))
        s2, clamped = self._clamp(raw)
        return Moments(m, s2, clamped)

    def moments_grid(self, points: np.ndarray):
        """Vectorized conditional moments for an (m, d) array of query points.

        Returns (means, variances, clamped_mask) as arrays of length m.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d = _cross_distances(self.history.points, points)  # (n, m)
        ups = self.kernel.of_distance(d)
        means = self.parameters.mu + self._resid_weights @ ups
        raw = 1.0 - np.einsum("im,im->m", ups, cho_solve(self._factor, ups))
        sigma2 = self.parameters.sigma2
        clamped = raw < -VARIANCE_CLAMP_TOL
        variances = sigma2 * np.clip(raw, 0.0, 1.0)
        return means, variances, clamped

    def _clamp(self, raw: float):
        clamped = raw < -VARIANCE_CLAMP_TOL
        return self.parameters.sigma2 * min(max(raw, 0.0), 1.0), clamped


def build_posterior(history: EvaluationHistory, kernel: CorrelationKernel,
                    estimator: str = "mle") -> SurrogatePosterior:
    """Estimate parameters and construct the posterior in one step."""
    return SurrogatePosterior(history, kernel, estimate(history, kernel, estimator))
