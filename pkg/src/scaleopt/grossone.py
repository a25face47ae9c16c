"""Minimal extended-numeral arithmetic for affine value scaling.

A numeral is a finite sum of terms ``c * G^p`` with integer grades p,
where G denotes the base infinite unit: p > 0 terms are infinite, p = 0
finite, p < 0 infinitesimal.  The supported operations (+, -, *,
division by a monomial, total order) are exactly what is needed to scale
objective values by ``a * y + b`` with infinite or infinitesimal a, b
and to evaluate the improvement-probability criterion on the scaled
values.  The criterion is a ratio whose grades cancel, so each evaluation
collapses back to an ordinary finite number; the collapse is checked at
run time.
"""

from __future__ import annotations

import math
import re
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve

from . import acquisition as acq
from .errors import CollapseError, UnsupportedDivisionError, UnsupportedScaleError
from .gp import CorrelationKernel, EvaluationHistory, _cross_distances, build_posterior
from .optimizer import (
    CandidateGrid,
    OptimizationTrace,
    TraceRecord,
    _evaluate,
    _first_unvisited,
    _relative_gap,
    _visited_mask,
    _ZERO_SPREAD_REL,
    default_initial_design,
)

# Coefficients whose magnitude falls below this fraction of the operand
# coefficients are treated as cancelled.
CANCEL_REL = 1e-15


class ExtendedNumeral:
    """Immutable finite sum of c * G^p terms in canonical form."""

    __slots__ = ("terms", "cancellation")

    def __init__(self, terms=None, _cancellation=False):
        canonical = {}
        for grade, coeff in (terms or {}).items():
            if coeff != 0.0:
                canonical[int(grade)] = float(coeff)
        object.__setattr__(self, "terms", canonical)
        object.__setattr__(self, "cancellation", bool(_cancellation))

    def __setattr__(self, name, value):
        raise AttributeError("ExtendedNumeral is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_real(cls, r) -> "ExtendedNumeral":
        return cls({0: float(r)})

    @classmethod
    def monomial(cls, coeff: float, grade: int) -> "ExtendedNumeral":
        return cls({int(grade): float(coeff)})

    # -- structure ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        """Purely finite: zero or a single grade-0 term."""
        return self.is_zero or set(self.terms) == {0}

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def leading(self):
        """(grade, coefficient) of the highest-grade term."""
        if self.is_zero:
            return (0, 0.0)
        grade = max(self.terms)
        return grade, self.terms[grade]

    def coefficient(self, grade: int) -> float:
        return self.terms.get(int(grade), 0.0)

    def to_real(self) -> float:
        if not self.is_finite:
            raise ValueError(f"{self} has infinite or infinitesimal part")
        return self.coefficient(0)

    # -- arithmetic ---------------------------------------------------

    def _combine(self, other, sign):
        other = _coerce(other)
        terms = dict(self.terms)
        cancelled = self.cancellation or other.cancellation
        for grade, coeff in other.terms.items():
            old = terms.get(grade, 0.0)
            new = old + sign * coeff
            scale = max(abs(old), abs(coeff))
            if new != 0.0 and abs(new) < CANCEL_REL * scale:
                cancelled = True
                new = 0.0
            terms[grade] = new
        return ExtendedNumeral(terms, cancelled)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return ExtendedNumeral({g: -c for g, c in self.terms.items()},
                               self.cancellation)

    def __mul__(self, other):
        other = _coerce(other)
        terms = {}
        for g1, c1 in self.terms.items():
            for g2, c2 in other.terms.items():
                terms[g1 + g2] = terms.get(g1 + g2, 0.0) + c1 * c2
        return ExtendedNumeral(terms, self.cancellation or other.cancellation)

    __rmul__ = __mul__

    def div_monomial(self, divisor) -> "ExtendedNumeral":
        divisor = _coerce(divisor)
        if not divisor.is_monomial:
            raise UnsupportedDivisionError(
                "division is supported only by a single nonzero term")
        grade, coeff = next(iter(divisor.terms.items()))
        return ExtendedNumeral({g - grade: c / coeff for g, c in self.terms.items()},
                               self.cancellation or divisor.cancellation)

    def __truediv__(self, other):
        return self.div_monomial(other)

    # -- order --------------------------------------------------------

    def compare(self, other) -> int:
        """Sign of self - other under the grade-lexicographic order."""
        diff = self - other
        if diff.is_zero:
            return 0
        _, coeff = diff.leading()
        return 1 if coeff > 0 else -1

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __eq__(self, other):
        if not isinstance(other, (ExtendedNumeral, int, float)):
            return NotImplemented
        return self.compare(other) == 0

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    # -- text form ----------------------------------------------------

    def __repr__(self):
        return f"ExtendedNumeral({self})"

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = []
        for grade in sorted(self.terms, reverse=True):
            coeff = self.terms[grade]
            sign = "-" if coeff < 0 else "+"
            mag = abs(coeff)
            if grade == 0:
                body = repr(mag)
            else:
                power = "G" if grade == 1 else f"G^{grade}"
                body = power if mag == 1.0 else f"{mag!r}*{power}"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


def _coerce(value) -> ExtendedNumeral:
    if isinstance(value, ExtendedNumeral):
        return value
    if isinstance(value, (int, float)):
        return ExtendedNumeral.from_real(value)
    raise TypeError(f"cannot interpret {value!r} as an extended numeral")


GROSSONE = ExtendedNumeral.monomial(1.0, 1)

_TERM_RE = re.compile(
    r"""(?P<sign>[+-]?)\s*
        (?:
            (?P<coeff>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*(?:\*\s*(?P<unit1>G(?:\^(?P<p1>-?\d+))?))?
          | (?P<unit2>G(?:\^(?P<p2>-?\d+))?)
        )\s*""",
    re.VERBOSE,
)


def parse_numeral(text: str) -> ExtendedNumeral:
    """Parse the textual numeral form, e.g. ``3*G^2 + 1.5 - 2*G^-1``."""
    pos = 0
    text = text.strip()
    if not text:
        raise ValueError("empty numeral")
    total = ExtendedNumeral()
    first = True
    while pos < len(text):
        match = _TERM_RE.match(text, pos)
        if not match or match.end() == pos:
            raise ValueError(f"cannot parse numeral {text!r} at position {pos}")
        sign = match.group("sign")
        if not first and sign == "":
            raise ValueError(f"missing +/- between terms in {text!r}")
        factor = -1.0 if sign == "-" else 1.0
        coeff = match.group("coeff")
        unit = match.group("unit1") or match.group("unit2")
        power = match.group("p1") or match.group("p2")
        grade = 0
        if unit is not None:
            grade = int(power) if power is not None else 1
        magnitude = float(coeff) if coeff is not None else 1.0
        total = total + ExtendedNumeral.monomial(factor * magnitude, grade)
        pos = match.end()
        first = False
    return total


def as_numeral(value) -> ExtendedNumeral:
    """Accept a numeral, a number, or the textual form."""
    if isinstance(value, str):
        return parse_numeral(value)
    return _coerce(value)


class StepCertificate:
    """Evidence that every extended criterion value collapsed to grade 0."""

    __slots__ = ("iteration", "max_relative_deviation", "collapsed")

    def __init__(self, iteration, max_relative_deviation, collapsed):
        self.iteration = iteration
        self.max_relative_deviation = max_relative_deviation
        self.collapsed = collapsed


def _require_positive_monomial(a: ExtendedNumeral) -> None:
    if not a.is_monomial:
        raise UnsupportedScaleError("scale factor a must be a single term c*G^p")
    _, coeff = a.leading()
    if coeff <= 0:
        raise UnsupportedScaleError("scale factor a must be positive")


def scaled_criterion_run(objective, a, b, lower, upper,
                         initial_design=None, budget: int = 15,
                         kernel: Optional[CorrelationKernel] = None,
                         estimator: str = "mle", epsilon: float = 0.1,
                         grid: Optional[CandidateGrid] = None,
                         collapse_tol: float = 1e-9):
    """P-algorithm run on extended-numeral values z = a*f(x) + b.

    The surrogate linear algebra stays in ordinary floats (it only sees
    the unscaled values); the scaling, the scaled estimates, the scaled
    aspiration level and the criterion numerator/denominator are carried
    as extended numerals.  Each candidate's criterion is divided by the
    monomial ``a * s_n(x)`` and must collapse to a purely finite value
    matching the conventional criterion; the per-step certificates record
    that this happened.

    Returns (trace, certificates).
    """
    a = as_numeral(a)
    b = as_numeral(b)
    _require_positive_monomial(a)
    kernel = kernel or CorrelationKernel()
    grid = grid or CandidateGrid.for_region(lower, upper)
    if initial_design is None:
        initial_design = default_initial_design(lower, upper)
    initial_design = np.atleast_2d(np.asarray(initial_design, dtype=float))

    trace = OptimizationTrace("p-algorithm")
    certificates = []
    history = None
    best = math.inf
    for point in initial_design:
        value = _evaluate(objective, point)
        best = min(best, value)
        if history is None:
            history = EvaluationHistory(lower, upper, point[None, :], [value])
        else:
            history = history.with_observation(point, value)
        trace.records.append(TraceRecord(0, -1, point, value, None, None, None,
                                         None, best))

    grid_points = grid.points
    for it in range(1, budget + 1):
        posterior = build_posterior(history, kernel, estimator)
        params = posterior.parameters
        if params.sigma <= _ZERO_SPREAD_REL * (1.0 + abs(params.mu)):
            point, idx = _first_unvisited(grid, history)
            value = _evaluate(objective, point)
            best = min(best, value)
            history = history.with_observation(point, value)
            trace.records.append(TraceRecord(it, idx, point, value, None,
                                             params.mu, params.sigma2, None, best,
                                             degenerate_step=True))
            continue

        # Scaled observations and equivariant estimates, as numerals.
        z = [a * y + b for y in history.values]
        mu_ext = a * params.mu + b
        sigma_ext = a * params.sigma  # positive monomial
        residuals = [zi - mu_ext for zi in z]
        z_min = z[0]
        for zi in z[1:]:
            if zi < z_min:
                z_min = zi
        z_on = z_min - epsilon * sigma_ext

        asp = acq.aspiration(history, params, epsilon)
        means, variances, _ = posterior.moments_grid(grid_points)
        s = np.sqrt(variances)
        ratio = s / params.sigma  # sqrt(1 - Ups' S^-1 Ups), scale free
        degenerate = s <= acq.DEGENERATE_FACTOR * params.sigma
        visited = _visited_mask(grid_points, history)
        # Residual weights S^-1 Ups per candidate, shared with the float path.
        ups = kernel.of_distance(_cross_distances(history.points, grid_points))
        weights = cho_solve(posterior._factor, ups)  # (n, m)

        conventional = np.where(degenerate, -np.inf,
                                (asp.y_on - means) / np.where(degenerate, 1.0, s))

        best_idx = None
        best_val = None
        second_val = None
        max_dev = 0.0
        for idx in range(grid_points.shape[0]):
            if visited[idx] or degenerate[idx]:
                continue
            m_ext = mu_ext
            for i, r in enumerate(residuals):
                m_ext = m_ext + weights[i, idx] * r
            denom = sigma_ext * ratio[idx]
            crit = (z_on - m_ext).div_monomial(denom)
            if not crit.is_finite:
                grade, coeff = crit.leading()
                scale = max(abs(crit.coefficient(0)), 1e-300)
                if abs(coeff) > collapse_tol * scale or grade > 0:
                    raise CollapseError(
                        f"criterion at grid index {idx} kept grade {grade}")
                crit = ExtendedNumeral.from_real(crit.coefficient(0))
            val = crit.to_real()
            ref = conventional[idx]
            dev = abs(val - ref) / max(abs(val), abs(ref), 1e-300)
            max_dev = max(max_dev, dev)
            if best_val is None or val > best_val:
                second_val = best_val
                best_val = val
                best_idx = idx
            elif second_val is None or val > second_val:
                second_val = val
        if best_idx is None:
            point, best_idx = _first_unvisited(grid, history)
            best_val = math.nan
        certificates.append(StepCertificate(it, max_dev, max_dev <= collapse_tol))
        if max_dev > collapse_tol:
            raise CollapseError(
                f"extended criterion deviates from conventional by {max_dev:.3e}")

        point = grid_points[best_idx]
        value = _evaluate(objective, point)
        best = min(best, value)
        history = history.with_observation(point, value)
        gap = (_relative_gap(best_val, second_val)
               if second_val is not None else math.inf)
        trace.records.append(TraceRecord(it, int(best_idx), point, value,
                                         best_val, params.mu, params.sigma2,
                                         asp.y_on, best, near_tie_gap=gap))
    return trace, certificates
