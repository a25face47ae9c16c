"""Sequential optimization loop over a deterministic candidate grid.

The acquisition argmax is computed on a fixed lattice with lowest-index
tie-breaking, so that two runs fed affinely related objective values can
be compared point by point.  An optional golden-section refinement
polishes the grid winner; it is off by default because the comparison
harness needs the selected points to live on the shared lattice.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import acquisition as acq
from .errors import (
    AllCandidatesDegenerateError,
    ObjectiveEvaluationError,
)
from .gp import (
    DUPLICATE_THRESHOLD,
    CorrelationKernel,
    EvaluationHistory,
    SurrogatePosterior,
    build_posterior,
)

P_ALGORITHM = "p-algorithm"
ONE_STEP_BAYES = "one-step-bayes"

_CRITERION_OF = {
    P_ALGORITHM: acq.P_CRITERION,
    ONE_STEP_BAYES: acq.EXPECTED_IMPROVEMENT,
}

# sigma-hat below this relative level counts as a zero-spread model.
_ZERO_SPREAD_REL = 1e-13


@dataclass(frozen=True)
class CandidateGrid:
    """Lexicographically ordered lattice over a hyper-rectangle."""

    lower: np.ndarray
    upper: np.ndarray
    resolution: int

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")

    @classmethod
    def for_region(cls, lower, upper, resolution: Optional[int] = None) -> "CandidateGrid":
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        if resolution is None:
            resolution = 1001 if lower.size == 1 else 101
        return cls(lower, upper, resolution)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def points(self) -> np.ndarray:
        axes = [np.linspace(self.lower[k], self.upper[k], self.resolution)
                for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def cell(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.resolution - 1)


@dataclass(frozen=True)
class Selection:
    point: np.ndarray
    grid_index: int
    value: float
    # relative gap to the runner-up criterion value (inf if no runner-up)
    runner_up_gap: float


def _visited_mask(points: np.ndarray, history: EvaluationHistory) -> np.ndarray:
    d = np.abs(points[:, None, :] - history.points[None, :, :]).max(axis=2)
    return (d <= DUPLICATE_THRESHOLD).any(axis=1)


def _relative_gap(best: float, second: float) -> float:
    if not (math.isfinite(best) and math.isfinite(second)):
        return math.inf
    denom = max(abs(best), abs(second), 1e-300)
    return (best - second) / denom


def argmax_criterion(kind: str, posterior: SurrogatePosterior,
                     asp: acq.AspirationLevel, grid: CandidateGrid,
                     refine: bool = False) -> Selection:
    """Best candidate on the grid, lowest index on exact ties.

    Candidates coinciding with history points are excluded; degenerate
    candidates rank below every non-degenerate one.
    """
    points = grid.points
    values, degenerate = acq.criterion_grid(kind, posterior, asp, points)
    visited = _visited_mask(points, posterior.history)
    eligible = ~visited & ~degenerate
    if not eligible.any():
        raise AllCandidatesDegenerateError(
            "no non-degenerate unvisited candidate on the grid")
    masked = np.where(eligible, values, -np.inf)
    idx = int(np.argmax(masked))  # first occurrence = lowest index
    best = float(masked[idx])
    rest = masked.copy()
    rest[idx] = -np.inf
    second = float(rest.max()) if np.isfinite(rest).any() else -math.inf
    point = points[idx]
    if refine:
        point = _refine(kind, posterior, asp, point, grid)
    return Selection(point, idx, best, _relative_gap(best, second))


def _refine(kind, posterior, asp, center, grid, iterations: int = 40):
    """Fixed-iteration golden-section polish, one coordinate at a time."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0

    def value_at(x):
        v, deg = acq.criterion_grid(kind, posterior, asp, x[None, :])
        return -math.inf if deg[0] else float(v[0])

    x = np.array(center, dtype=float)
    for k in range(grid.dim):
        lo = max(x[k] - grid.cell[k], grid.lower[k])
        hi = min(x[k] + grid.cell[k], grid.upper[k])
        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        xc, xd = x.copy(), x.copy()
        for _ in range(iterations):
            xc[k], xd[k] = c, d
            if value_at(xc) >= value_at(xd):
                b, d = d, c
                c = b - invphi * (b - a)
            else:
                a, c = c, d
                d = a + invphi * (b - a)
        best = 0.5 * (a + b)
        xb = x.copy()
        xb[k] = best
        if value_at(xb) > value_at(x):
            x = xb
    return x


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    grid_index: int
    point: np.ndarray
    value: float
    criterion: Optional[float]
    mu: Optional[float]
    sigma2: Optional[float]
    y_on: Optional[float]
    best: float
    near_tie_gap: Optional[float] = None
    degenerate_step: bool = False


@dataclass
class OptimizationTrace:
    algorithm: str
    records: list = field(default_factory=list)

    @property
    def grid_indices(self):
        return [r.grid_index for r in self.records if r.iteration > 0]

    @property
    def best_value(self) -> float:
        return self.records[-1].best

    @property
    def best_point(self) -> np.ndarray:
        best = min((r for r in self.records), key=lambda r: r.value)
        return best.point

    def _rows(self):
        dim = self.records[0].point.size if self.records else 1
        header = (["iter", "grid_index"] + [f"x{k}" for k in range(dim)]
                  + ["y", "criterion", "mu", "sigma2", "y_on", "best"])
        rows = [header]
        for r in self.records:
            rows.append(
                [r.iteration, r.grid_index]
                + [repr(float(c)) for c in r.point]
                + [repr(float(r.value))]
                + ["" if v is None else repr(float(v))
                   for v in (r.criterion, r.mu, r.sigma2, r.y_on)]
                + [repr(float(r.best))]
            )
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(self._rows())
        return buf.getvalue()

    def to_json(self) -> str:
        header, *rows = self._rows()
        records = []
        for row in rows:
            rec = {}
            for key, cell in zip(header, row):
                if cell == "":
                    rec[key] = None
                elif key in ("iter", "grid_index"):
                    rec[key] = int(cell)
                else:
                    rec[key] = float(cell)
            records.append(rec)
        return json.dumps({"algorithm": self.algorithm, "records": records}, indent=2)


def default_initial_design(lower, upper, count: int = 5) -> np.ndarray:
    """Deterministic starting design: equispaced in 1-D, corners+center else."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.size == 1:
        return np.linspace(lower[0], upper[0], count)[:, None]
    corners = np.stack(np.meshgrid(*zip(lower, upper), indexing="ij"),
                       axis=-1).reshape(-1, lower.size)
    center = 0.5 * (lower + upper)
    return np.vstack([corners, center[None, :]])


def _evaluate(objective: Callable, point: np.ndarray) -> float:
    value = float(objective(point if point.size > 1 else point[0]))
    if not math.isfinite(value):
        raise ObjectiveEvaluationError(point, value)
    return value


def _first_unvisited(grid: CandidateGrid, history: EvaluationHistory):
    points = grid.points
    visited = _visited_mask(points, history)
    idx = int(np.argmin(visited))
    if visited[idx]:
        raise AllCandidatesDegenerateError("every grid candidate already visited")
    return points[idx], idx


def run(algorithm: str, objective: Callable, lower, upper,
        initial_design: Optional[np.ndarray] = None, budget: int = 20,
        kernel: Optional[CorrelationKernel] = None, estimator: str = "mle",
        epsilon: float = 0.1, grid: Optional[CandidateGrid] = None,
        refine: bool = False) -> OptimizationTrace:
    """Run a surrogate-guided optimization for a fixed evaluation budget."""
    if algorithm not in _CRITERION_OF:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    kind = _CRITERION_OF[algorithm]
    kernel = kernel or CorrelationKernel()
    grid = grid or CandidateGrid.for_region(lower, upper)
    if initial_design is None:
        initial_design = default_initial_design(lower, upper)
    initial_design = np.atleast_2d(np.asarray(initial_design, dtype=float))

    trace = OptimizationTrace(algorithm)
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

    for it in range(1, budget + 1):
        posterior = build_posterior(history, kernel, estimator)
        params = posterior.parameters
        zero_spread = params.sigma <= _ZERO_SPREAD_REL * (1.0 + abs(params.mu))
        if zero_spread:
            # Criterion undefined everywhere: fall back to grid-order exploration.
            point, idx = _first_unvisited(grid, history)
            value = _evaluate(objective, point)
            best = min(best, value)
            history = history.with_observation(point, value)
            trace.records.append(TraceRecord(it, idx, point, value, None,
                                             params.mu, params.sigma2, None, best,
                                             degenerate_step=True))
            continue
        asp = acq.aspiration(history, params, epsilon)
        sel = argmax_criterion(kind, posterior, asp, grid, refine=refine)
        value = _evaluate(objective, sel.point)
        best = min(best, value)
        history = history.with_observation(sel.point, value)
        trace.records.append(TraceRecord(it, sel.grid_index, sel.point, value,
                                         sel.value, params.mu, params.sigma2,
                                         asp.y_on, best,
                                         near_tie_gap=sel.runner_up_gap))
    return trace
