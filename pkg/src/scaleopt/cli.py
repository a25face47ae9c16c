"""Command-line front end.

Subcommands:
  run          optimize a built-in objective and write trace files
  homogeneity  compare a base run against an affinely scaled run
  example-fig1 emit plot data for the five-point planning example
  direct-demo  show DIRECT changing its subdivisions under translation
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import direct1d, harness, objectives, optimizer
from .errors import ConfigError, ScaleoptError
from .gp import CorrelationKernel

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_common_run_flags(p):
    p.add_argument("--objective", default="sin3x2",
                   choices=sorted(objectives.BUILTIN_OBJECTIVES))
    p.add_argument("--kernel", default="exponential",
                   choices=["exponential", "squared-exponential"])
    p.add_argument("--kernel-c", type=float, default=5.0)
    p.add_argument("--estimator", default="mle", choices=["sample", "mle"])
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--grid-resolution", type=int, default=1001)
    p.add_argument("--refine", action="store_true",
                   help="golden-section polish of the grid winner")
    p.add_argument("--config", help="JSON file with defaults; flags override")


def _apply_config_file(args, argv):
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    defaults = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(defaults) - set(vars(args))
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    # Flags explicitly given on the command line win over file values.
    given = {a.split("=")[0].lstrip("-").replace("-", "_")
             for a in argv if a.startswith("--")}
    for key, value in defaults.items():
        if key not in given:
            setattr(args, key, value)
    return args


def _build_kwargs(args):
    objective, (lower, upper) = objectives.get_objective(args.objective)
    grid = optimizer.CandidateGrid.for_region([lower], [upper],
                                              args.grid_resolution)
    kernel = CorrelationKernel(args.kernel, args.kernel_c)
    return objective, lower, upper, dict(
        budget=args.budget, kernel=kernel, estimator=args.estimator,
        epsilon=args.epsilon, grid=grid)


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_run(args) -> int:
    algorithm = {"p": optimizer.P_ALGORITHM,
                 "ei": optimizer.ONE_STEP_BAYES}[args.algorithm]
    objective, lower, upper, kwargs = _build_kwargs(args)
    trace = optimizer.run(algorithm, objective, [lower], [upper],
                          refine=args.refine, **kwargs)
    _write(args.output + ".csv", trace.to_csv())
    _write(args.output + ".json", trace.to_json())
    best = trace.best_point
    print(f"best point: {best.tolist()}  best value: {trace.best_value!r}")
    print(f"trace written to {args.output}.csv / {args.output}.json")
    return EXIT_OK


def cmd_homogeneity(args) -> int:
    if args.algorithm == "direct":
        case = harness.build_direct_counterexample(epsilon=args.direct_epsilon,
                                                   budget=args.budget)
        mismatch, base, shifted = harness.direct_homogeneity_check(case)
        print(f"translation shift: {case.shift!r} "
              f"(threshold delta_f={case.delta_f!r}, eps={case.epsilon})")
        if mismatch is None:
            print("no subdivision mismatch observed")
            return EXIT_OK
        print(f"subdivision mismatch at iteration {mismatch}")
        print("base iterations:")
        print(base.to_csv())
        print("shifted iterations:")
        print(shifted.to_csv())
        return EXIT_MISMATCH

    algorithm = {"p": optimizer.P_ALGORITHM,
                 "ei": optimizer.ONE_STEP_BAYES}[args.algorithm]
    objective, lower, upper, kwargs = _build_kwargs(args)
    report = harness.homogeneity_check(algorithm, objective, [lower], [upper],
                                       args.a, args.b, **kwargs)
    for line in report.summary_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_MISMATCH


def cmd_example_fig1(args) -> int:
    data = harness.fig1_reproduction(estimator=args.estimator,
                                     epsilon=args.epsilon,
                                     resolution=args.grid_resolution)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        cols = ["x", "m_f", "s_f", "crit_f", "m_phi", "s_phi", "crit_phi"]
        writer.writerow(cols)
        for row in zip(*(data[c] for c in cols)):
            writer.writerow([repr(float(v)) for v in row])
    print(f"printed-phi max deviation from a*f+b: {data['printed_phi_deviation']!r}")
    print(f"aspiration levels: y_on={data['y_on_f']!r} z_on={data['y_on_phi']!r}")
    print(f"criterion argmax: f -> {data['argmax_f']}, phi -> {data['argmax_phi']}")
    print(f"plot data written to {args.output}")
    return EXIT_OK


def cmd_direct_demo(args) -> int:
    case = harness.build_direct_counterexample(epsilon=args.direct_epsilon,
                                               budget=args.budget)
    partition, trace = direct1d.run_direct(case.objective, case.lower,
                                           case.upper, case.epsilon,
                                           case.budget)
    _write(args.output + "_partition.json", partition.to_json())
    _write(args.output + "_trace.csv", trace.to_csv())
    mismatch, _, _ = harness.direct_homogeneity_check(case)
    print(f"counterexample interval {case.interval_index} at iteration "
          f"{case.found_at_iteration}; shift {case.shift!r}")
    print(f"subdivision mismatch at iteration {mismatch}"
          if mismatch is not None else "no mismatch observed")
    print(f"partition/trace written to {args.output}_partition.json / "
          f"{args.output}_trace.csv")
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(prog="scaleopt")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an optimization")
    p_run.add_argument("--algorithm", default="p", choices=["p", "ei"])
    _add_common_run_flags(p_run)
    p_run.add_argument("--output", default="trace")
    p_run.set_defaults(func=cmd_run)

    p_hom = sub.add_parser("homogeneity", help="affine-scaling comparison")
    p_hom.add_argument("--algorithm", default="p", choices=["p", "ei", "direct"])
    _add_common_run_flags(p_hom)
    p_hom.add_argument("--a", default="1",
                       help="scale factor; float or numeral like 3*G^2")
    p_hom.add_argument("--b", default="0",
                       help="offset; float or numeral like G^-1")
    p_hom.add_argument("--direct-epsilon", type=float, default=1e-4)
    p_hom.set_defaults(func=cmd_homogeneity)

    p_fig = sub.add_parser("example-fig1", help="five-point example data")
    p_fig.add_argument("--estimator", default="mle", choices=["sample", "mle"])
    p_fig.add_argument("--epsilon", type=float, default=0.1)
    p_fig.add_argument("--grid-resolution", type=int, default=1001)
    p_fig.add_argument("--output", default="fig1.csv")
    p_fig.set_defaults(func=cmd_example_fig1)

    p_dd = sub.add_parser("direct-demo", help="DIRECT translation sensitivity")
    p_dd.add_argument("--direct-epsilon", type=float, default=1e-4)
    p_dd.add_argument("--budget", type=int, default=6)
    p_dd.add_argument("--output", default="direct_demo")
    p_dd.set_defaults(func=cmd_direct_demo)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(args, argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScaleoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
