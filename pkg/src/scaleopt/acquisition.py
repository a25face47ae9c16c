"""Acquisition criteria over the Gaussian surrogate.

Two criteria are provided: the improvement-probability statistic
``(y_on - m(x)) / s(x)`` and the expected improvement over the
aspiration level, in its closed form ``s * (u * Phi(u) + phi(u))``
with ``u = (y_on - m) / s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .gp import EvaluationHistory, ModelParameters, SurrogatePosterior

# s(x) <= DEGENERATE_FACTOR * sigma marks a query point degenerate.
DEGENERATE_FACTOR = 1e-12

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

P_CRITERION = "p-criterion"
EXPECTED_IMPROVEMENT = "expected-improvement"


@dataclass(frozen=True)
class AspirationLevel:
    """Target level below the current best, scaled by the estimated spread."""

    y_on: float
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class CriterionValue:
    kind: str
    value: float
    degenerate: bool = False


def aspiration(history: EvaluationHistory, parameters: ModelParameters,
               epsilon: float = 0.1) -> AspirationLevel:
    """Aspiration level min_i y_i - epsilon * sigma-hat."""
    if not (epsilon > 0):
        raise ValueError("epsilon must be positive")
    return AspirationLevel(float(history.values.min()) - epsilon * parameters.sigma,
                           epsilon)


def normal_cdf(t):
    """Standard normal cumulative distribution function."""
    if np.isscalar(t) or np.ndim(t) == 0:
        return 0.5 * math.erfc(-float(t) / _SQRT2)
    return 0.5 * erfc(-np.asarray(t, dtype=float) / _SQRT2)


def normal_pdf(t):
    t = np.asarray(t, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * t * t)
    return float(out) if out.ndim == 0 else out


def _degenerate_threshold(posterior: SurrogatePosterior) -> float:
    return DEGENERATE_FACTOR * posterior.parameters.sigma


def _at_history_point(posterior: SurrogatePosterior, x) -> bool:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    gap = np.abs(posterior.history.points - x[None, :]).max(axis=1)
    return bool(gap.min() <= 1e-12)


def p_criterion(posterior: SurrogatePosterior, asp: AspirationLevel, x) -> CriterionValue:
    """Improvement-probability statistic at a single point."""
    m, s2, _ = posterior.conditional_moments(x)
    s = math.sqrt(s2)
    if s <= _degenerate_threshold(posterior) or _at_history_point(posterior, x):
        # Known point (or zero-spread model): re-evaluation cannot improve.
        return CriterionValue(P_CRITERION, -math.inf, degenerate=True)
    return CriterionValue(P_CRITERION, (asp.y_on - m) / s)


def expected_improvement(posterior: SurrogatePosterior, asp: AspirationLevel, x) -> CriterionValue:
    """Expected improvement over the aspiration level at a single point."""
    m, s2, _ = posterior.conditional_moments(x)
    s = math.sqrt(s2)
    if s <= _degenerate_threshold(posterior) or _at_history_point(posterior, x):
        return CriterionValue(EXPECTED_IMPROVEMENT, max(asp.y_on - m, 0.0),
                              degenerate=True)
    u = (asp.y_on - m) / s
    return CriterionValue(EXPECTED_IMPROVEMENT, s * (u * normal_cdf(u) + normal_pdf(u)))


def ei_closed_form(m, s, y_on):
    """Vectorized closed-form EI for given posterior moments.

    Entries with s == 0 get the deterministic limit max(y_on - m, 0).
    """
    m = np.asarray(m, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(s > 0, (y_on - m) / np.where(s > 0, s, 1.0), 0.0)
    ei = s * (u * normal_cdf(u) + normal_pdf(u))
    return np.where(s > 0, ei, np.maximum(y_on - m, 0.0))


def criterion_grid(kind: str, posterior: SurrogatePosterior, asp: AspirationLevel,
                   points: np.ndarray):
    """Criterion values and degeneracy mask over an (m, d) candidate array."""
    means, variances, _ = posterior.moments_grid(points)
    s = np.sqrt(variances)
    degenerate = s <= _degenerate_threshold(posterior)
    if kind == P_CRITERION:
        with np.errstate(divide="ignore", invalid="ignore"):
            values = (asp.y_on - means) / np.where(degenerate, 1.0, s)
        values = np.where(degenerate, -np.inf, values)
    elif kind == EXPECTED_IMPROVEMENT:
        values = ei_closed_form(means, np.where(degenerate, 0.0, s), asp.y_on)
    else:
        raise ValueError(f"unknown criterion kind {kind!r}")
    return values, degenerate
