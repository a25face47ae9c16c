"""One-dimensional DIRECT with the potentially-optimal-interval test.

Also provides the translation-shift construction showing that DIRECT is
not invariant under adding a constant to the objective: for a suitable
interval j the returned shift threshold ``delta_f`` guarantees that any
translation larger than ``delta_f / eps`` removes j from the set of
potentially optimal intervals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ObjectiveEvaluationError, PreconditionError

# Slack applied to the Lipschitz-bound inequalities; exact boundary
# equality is measure-zero fragile in floating point.
FEASIBILITY_SLACK = 1e-12

# Half-lengths within this relative tolerance count as equal; trisection
# produces same-generation intervals whose widths differ only in the
# last few ulps.
DELTA_EQ_REL = 1e-9

DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class Interval:
    a: float
    b: float
    fc: float

    def __post_init__(self):
        if not (self.a < self.b):
            raise ValueError("interval needs a < b")
        if not math.isfinite(self.fc):
            raise ValueError("midpoint value must be finite")

    @property
    def c(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def delta(self) -> float:
        return 0.5 * (self.b - self.a)


@dataclass
class DirectPartition:
    intervals: list
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.intervals:
            raise ValueError("partition must contain at least one interval")

    @property
    def f_min(self) -> float:
        return min(iv.fc for iv in self.intervals)

    def deltas(self) -> np.ndarray:
        return np.array([iv.delta for iv in self.intervals])

    def values(self) -> np.ndarray:
        return np.array([iv.fc for iv in self.intervals])

    def to_json(self) -> str:
        return json.dumps({
            "epsilon": self.epsilon,
            "intervals": [{"a": iv.a, "b": iv.b, "fc": iv.fc}
                          for iv in self.intervals],
        }, indent=2)


@dataclass(frozen=True)
class PotentialOptimality:
    decision: bool
    # feasible Lipschitz range when accepted, violated bound otherwise
    l_lo: float
    l_hi: float
    reason: str


def potentially_optimal(partition: DirectPartition, j: int) -> PotentialOptimality:
    """Closed-form test for whether interval j could hold the best bound.

    Accepts iff some L > 0 gives interval j the smallest Lipschitz lower
    bound and that bound undercuts f_min by the required relative margin.
    """
    deltas = partition.deltas()
    values = partition.values()
    n = deltas.size
    if not (0 <= j < n):
        raise IndexError(f"interval index {j} out of range")
    dj, fj = deltas[j], values[j]
    f_min = partition.f_min
    eps = partition.epsilon

    tol = DELTA_EQ_REL * np.maximum(deltas, dj)
    same = (np.abs(deltas - dj) <= tol) & (np.arange(n) != j)
    if np.any(values[same] < fj - FEASIBILITY_SLACK):
        return PotentialOptimality(False, math.nan, math.nan,
                                   "dominated by an equal-length interval")

    shorter = (deltas < dj) & ~same
    longer = (deltas > dj) & ~same
    l_lo = (fj - f_min + eps * abs(f_min)) / dj
    if shorter.any():
        l_lo = max(l_lo, float(((fj - values[shorter]) / (dj - deltas[shorter])).max()))
    l_hi = math.inf
    if longer.any():
        l_hi = float(((values[longer] - fj) / (deltas[longer] - dj)).min())

    if l_hi <= 0:
        return PotentialOptimality(False, l_lo, l_hi, "no positive L admissible")
    if max(l_lo, 0.0) <= l_hi + FEASIBILITY_SLACK:
        return PotentialOptimality(True, l_lo, l_hi, "feasible L range")
    return PotentialOptimality(False, l_lo, l_hi, "lower bound exceeds upper bound")


def potentially_optimal_indices(partition: DirectPartition) -> list:
    return [j for j in range(len(partition.intervals))
            if potentially_optimal(partition, j).decision]


def counterexample_shift(partition: DirectPartition, j: int) -> float:
    """Translation threshold delta_f for interval j.

    For any delta > delta_f / epsilon, interval j is no longer
    potentially optimal once every midpoint value is shifted by delta.
    """
    deltas = partition.deltas()
    values = partition.values()
    dj, fj = deltas[j], values[j]
    if np.any(values <= 0):
        raise PreconditionError("all midpoint values must be positive")
    if not potentially_optimal(partition, j).decision:
        raise PreconditionError(f"interval {j} is not potentially optimal")
    longer = (deltas - dj) > DELTA_EQ_REL * np.maximum(deltas, dj)
    if not longer.any():
        raise PreconditionError(f"interval {j} has no strictly longer neighbour")
    slopes = (values[longer] - fj) / (deltas[longer] - dj)
    k = int(np.argmin(slopes))
    f_plus = values[longer][k]
    d_plus = deltas[longer][k]
    f_min = partition.f_min
    eps = partition.epsilon
    return (f_plus - fj) * dj / (d_plus - dj) - fj + (1.0 - eps) * f_min


def trisect(interval: Interval, objective: Callable):
    """Split an interval into thirds; the middle third keeps the known value."""
    a, b = interval.a, interval.b
    w = (b - a) / 3.0
    left = Interval(a, a + w, _evaluate(objective, a + 0.5 * w))
    mid = Interval(a + w, a + 2.0 * w, interval.fc)
    right = Interval(a + 2.0 * w, b, _evaluate(objective, b - 0.5 * w))
    return [left, mid, right]


def _evaluate(objective: Callable, x: float) -> float:
    value = float(objective(x))
    if not math.isfinite(value):
        raise ObjectiveEvaluationError(x, value)
    return value


@dataclass
class DirectTrace:
    iterations: list = field(default_factory=list)  # list of dicts

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "subdivided_indices", "f_min", "n_intervals"])
        for rec in self.iterations:
            writer.writerow([rec["iter"],
                             ";".join(str(i) for i in rec["subdivided_indices"]),
                             repr(rec["f_min"]), rec["n_intervals"]])
        return buf.getvalue()

    def subdivided_keys(self):
        """Per-iteration sets of subdivided intervals, keyed by endpoints."""
        return [frozenset(rec["subdivided_endpoints"]) for rec in self.iterations]


def run_direct(objective: Callable, lower: float, upper: float,
               epsilon: float = DEFAULT_EPSILON, budget: int = 10):
    """DIRECT iterations on [lower, upper]; returns (partition, trace)."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    root = Interval(lower, upper, _evaluate(objective, 0.5 * (lower + upper)))
    partition = DirectPartition([root], epsilon)
    trace = DirectTrace()
    for it in range(1, budget + 1):
        chosen = potentially_optimal_indices(partition)
        new_intervals = []
        for idx, iv in enumerate(partition.intervals):
            if idx in chosen:
                new_intervals.extend(trisect(iv, objective))
            else:
                new_intervals.append(iv)
        trace.iterations.append({
            "iter": it,
            "subdivided_indices": chosen,
            "subdivided_endpoints": [(partition.intervals[i].a,
                                      partition.intervals[i].b) for i in chosen],
            "f_min": partition.f_min,
            "n_intervals": len(new_intervals),
        })
        partition = DirectPartition(new_intervals, epsilon)
    return partition, trace
