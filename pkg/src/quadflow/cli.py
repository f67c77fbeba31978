"""Command-line entry point.

    quadflow run --experiment <name> [--config cfg.json] [overrides]
    quadflow list

Overrides beat config-file fields.  Exit codes: 0 success, 1 invalid
configuration, 2 numerical failure (divergence or a residual/conditioning
breach).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import ConfigError, ExperimentConfig, catalog, run_experiment
from .flow import FlowDivergenceError
from .highdim import HighDimSolverError
from .implicit import IllConditionedError, SelfConsistencyError

NUMERICAL_FAILURES = (FlowDivergenceError, HighDimSolverError,
                      IllConditionedError, SelfConsistencyError,
                      FloatingPointError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadflow",
        description="Reproducible experiments for the quadratic teacher-student "
                    "gradient flow.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", help="experiment name (see `quadflow list`)")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--seed", type=int, help="base seed (seeds are seed, seed+1, ...)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--d", help="comma-separated dimension list, e.g. 100,200,400")
    run.add_argument("--alpha", type=float, help="student rank ratio m/d")
    run.add_argument("--alpha-star", type=float, dest="alpha_star",
                     help="teacher rank ratio m*/d")
    run.add_argument("--eta", type=float, help="gradient-descent step size")
    run.add_argument("--horizon", type=float,
                     help="integration horizon (t, or gamma for rescaled runs)")
    run.add_argument("--n-seeds", type=int, dest="n_seeds",
                     help="number of seeds to average over")
    run.add_argument("--profile", choices=("full", "quick"),
                     help="acceptance experiment size profile")

    sub.add_parser("list", help="print the experiment catalog")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        raw = dataclasses.asdict(ExperimentConfig.from_json(args.config))
    for key in ("experiment", "seed", "out", "alpha", "alpha_star", "eta",
                "horizon", "n_seeds", "profile"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if args.d is not None:
        try:
            raw["d"] = tuple(int(x) for x in str(args.d).split(",") if x)
        except ValueError as exc:
            raise ConfigError(f"cannot parse --d {args.d!r}") from exc
    if "experiment" not in raw or raw["experiment"] is None:
        raise ConfigError("an experiment must be named via --experiment or the config file")
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        width = max(len(name) for name in catalog())
        for name, desc in catalog().items():
            print(f"{name:<{width}}  {desc}")
        return 0

    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        files = run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_FAILURES as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
