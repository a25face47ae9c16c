"""Affine-scaling comparison harness.

Runs an algorithm on an objective and on its affinely scaled counterpart
``a*f + b`` and compares the selected grid indices step by step.  The
surrogate-based algorithms are expected to produce identical sequences;
DIRECT is expected to diverge on a suitably constructed translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import direct1d, grossone, optimizer
from .errors import ConfigError
from .gp import CorrelationKernel

# Steps whose top-two criterion values are closer than this (relative)
# count as ties rather than mismatches.
NEAR_TIE_REL = 1e-9


@dataclass(frozen=True)
class StepComparison:
    iteration: int
    index_base: int
    index_scaled: int
    match: bool
    near_tie: bool


@dataclass
class ComparisonReport:
    algorithm: str
    a: object
    b: object
    steps: list = field(default_factory=list)
    diverged_at_tie: Optional[int] = None  # iteration of benign divergence

    @property
    def passed(self) -> bool:
        return all(s.match or s.near_tie for s in self.steps)

    @property
    def first_mismatch(self) -> Optional[int]:
        for s in self.steps:
            if not (s.match or s.near_tie):
                return s.iteration
        return None

    def summary_lines(self):
        lines = []
        for s in self.steps:
            tag = "match" if s.match else ("tie" if s.near_tie else "MISMATCH")
            lines.append(f"step {s.iteration}: base={s.index_base} "
                         f"scaled={s.index_scaled} {tag}")
        if self.diverged_at_tie is not None:
            lines.append(f"runs diverged at a near-tie on step "
                         f"{self.diverged_at_tie}; later steps not comparable")
        lines.append("PASS" if self.passed else "FAIL")
        return lines


def _step_records(trace):
    return [r for r in trace.records if r.iteration > 0]


def compare_traces(base, scaled, algorithm: str, a, b) -> ComparisonReport:
    """Step-by-step grid-index comparison of two optimization traces.

    After the first divergence the two histories differ, so later steps
    carry no information: a divergence at a near-tie ends the comparison
    benignly, a hard divergence is a failure.
    """
    report = ComparisonReport(algorithm, a, b)
    for rb, rs in zip(_step_records(base), _step_records(scaled)):
        if rb.grid_index == rs.grid_index:
            report.steps.append(StepComparison(rb.iteration, rb.grid_index,
                                               rs.grid_index, True, False))
            continue
        gaps = [g for g in (rb.near_tie_gap, rs.near_tie_gap) if g is not None]
        near = bool(gaps) and min(gaps) < NEAR_TIE_REL
        report.steps.append(StepComparison(rb.iteration, rb.grid_index,
                                           rs.grid_index, False, near))
        if near:
            report.diverged_at_tie = rb.iteration
        break
    return report


def homogeneity_check(algorithm: str, objective: Callable, lower, upper, a, b,
                      budget: int = 25, kernel: Optional[CorrelationKernel] = None,
                      estimator: str = "mle", epsilon: float = 0.1,
                      grid=None, initial_design=None) -> ComparisonReport:
    """Compare a base run against the run on a*f + b.

    a and b may be floats or extended numerals (numeral strings accepted);
    extended scalings route the scaled run through the extended-arithmetic
    criterion evaluation.
    """
    a_num = grossone.as_numeral(a)
    b_num = grossone.as_numeral(b)
    kwargs = dict(budget=budget, kernel=kernel, estimator=estimator,
                  epsilon=epsilon, grid=grid, initial_design=initial_design)
    base = optimizer.run(algorithm, objective, lower, upper, **kwargs)
    if a_num.is_finite and b_num.is_finite:
        av, bv = a_num.to_real(), b_num.to_real()
        if av == 0:
            raise ConfigError("scale factor a must be nonzero")
        scaled_objective = lambda x: av * objective(x) + bv
        scaled = optimizer.run(algorithm, scaled_objective, lower, upper, **kwargs)
    else:
        if algorithm != optimizer.P_ALGORITHM:
            raise ConfigError(
                "extended-numeral scaling is supported for the P-algorithm only")
        scaled, _ = grossone.scaled_criterion_run(objective, a_num, b_num,
                                                  lower, upper, **kwargs)
    return compare_traces(base, scaled, algorithm, a, b)


# -- five-point planning example --------------------------------------

def fig1_reproduction(estimator: str = "mle", epsilon: float = 0.1,
                      resolution: int = 1001):
    """One planning step of the P-algorithm on the five-point example data.

    Evaluates posterior mean, standard deviation and the improvement
    criterion on a grid over [0, 1] for the raw values and for the
    affinely related second data set computed exactly as a*f + b, and
    reports the shared criterion argmax.
    """
    from . import acquisition as acq
    from . import objectives as obj
    from .gp import EvaluationHistory, build_posterior

    points = np.array(obj.FIG1_POINTS)[:, None]
    f_vals = np.array(obj.FIG1_F_VALUES)
    phi_exact = obj.FIG1_A * f_vals + obj.FIG1_B
    printed_dev = float(np.abs(np.array(obj.FIG1_PHI_VALUES) - phi_exact).max())
    kernel = CorrelationKernel("exponential", obj.FIG1_KERNEL_C)
    xs = np.linspace(0.0, 1.0, resolution)[:, None]

    out = {"x": xs.ravel(), "printed_phi_deviation": printed_dev,
           "a": obj.FIG1_A, "b": obj.FIG1_B}
    for tag, vals in (("f", f_vals), ("phi", phi_exact)):
        history = EvaluationHistory([0.0], [1.0], points, vals)
        posterior = build_posterior(history, kernel, estimator)
        asp = acq.aspiration(history, posterior.parameters, epsilon)
        means, variances, _ = posterior.moments_grid(xs)
        crit, degenerate = acq.criterion_grid(acq.P_CRITERION, posterior, asp, xs)
        out[f"m_{tag}"] = means
        out[f"s_{tag}"] = np.sqrt(variances)
        out[f"crit_{tag}"] = crit
        out[f"y_on_{tag}"] = asp.y_on
        eligible = np.where(degenerate, -np.inf, crit)
        out[f"argmax_{tag}"] = int(np.argmax(eligible))
    return out


# -- DIRECT translation counterexample --------------------------------

@dataclass(frozen=True)
class DirectCounterexample:
    objective: Callable
    lower: float
    upper: float
    epsilon: float
    budget: int
    shift: float
    interval_index: int
    found_at_iteration: int
    delta_f: float


def _default_direct_objective(x):
    return (x - 0.31) ** 2 + 1.0


def build_direct_counterexample(epsilon: float = 1e-4, budget: int = 6,
                                objective: Callable = _default_direct_objective,
                                lower: float = 0.0, upper: float = 1.0,
                                ) -> DirectCounterexample:
    """Find a translation that changes which intervals DIRECT subdivides.

    Runs DIRECT on the base objective, looks for a potentially optimal
    interval that is not the longest, and derives the shift threshold for
    it; any translation above threshold/epsilon removes that interval
    from the potentially optimal set.
    """
    root = direct1d.Interval(lower, upper,
                             float(objective(0.5 * (lower + upper))))
    partition = direct1d.DirectPartition([root], epsilon)
    for it in range(1, budget + 1):
        chosen = direct1d.potentially_optimal_indices(partition)
        deltas = partition.deltas()
        longest = deltas.max()
        for j in chosen:
            iv = partition.intervals[j]
            if (iv.delta < longest * (1.0 - direct1d.DELTA_EQ_REL)
                    and partition.values().min() > 0):
                delta_f = direct1d.counterexample_shift(partition, j)
                shift = 1.01 * delta_f / epsilon if delta_f > 0 else 1.0
                return DirectCounterexample(objective, lower, upper, epsilon,
                                            budget, shift, j, it, delta_f)
        new_intervals = []
        for idx, iv in enumerate(partition.intervals):
            if idx in chosen:
                new_intervals.extend(direct1d.trisect(iv, objective))
            else:
                new_intervals.append(iv)
        partition = direct1d.DirectPartition(new_intervals, epsilon)
    raise ConfigError("no suitable interval found; increase the budget")


def direct_homogeneity_check(case: Optional[DirectCounterexample] = None):
    """Run DIRECT on f and on f + shift and compare subdivision choices.

    Returns (mismatch_iteration or None, base_trace, shifted_trace).
    """
    case = case or build_direct_counterexample()
    _, base = direct1d.run_direct(case.objective, case.lower, case.upper,
                                  case.epsilon, case.budget)
    shifted_obj = lambda x: case.objective(x) + case.shift
    _, shifted = direct1d.run_direct(shifted_obj, case.lower, case.upper,
                                     case.epsilon, case.budget)
    for it, (kb, ks) in enumerate(zip(base.subdivided_keys(),
                                      shifted.subdivided_keys()), start=1):
        if kb != ks:
            return it, base, shifted
    return None, base, shifted
