"""``nystrom-bench``: error curves, embedding dumps and bound checks.

Exit codes: 0 on success, 2 for configuration or parameter errors,
3 when a run is blocked by a numerical degeneracy.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..exceptions import EigenSolverError, NumericalDegeneracyError, ParameterError
from .config import ExperimentConfig, load_config
from .experiments import (
    run_embedding_experiment,
    run_error_experiment,
    verify_bounds,
    write_bounds_report,
    write_error_curve,
)

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE = 0, 2, 3

log = logging.getLogger("nystrom_landmarks.bench")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nystrom-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "error-curve": "mean normalized Nystrom error per method and rank",
        "embed": "exact and Nystrom diffusion-maps embeddings",
        "verify-bounds": "check the error bounds on random PSD instances",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--trials", type=int, help="trials per method and rank")
        p.add_argument("--rank-min", type=int, help="smallest rank")
        p.add_argument("--rank-max", type=int, help="largest rank")
        p.add_argument("--out", help="output directory")
        p.add_argument("--header", action="store_true", default=None,
                       help="skip one header line of a CSV dataset")
    return parser


def resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    return config.replace(seed=args.seed, trials=args.trials, rank_min=args.rank_min,
                          rank_max=args.rank_max, out=args.out, header=args.header)


def run(args) -> int:
    config = resolve_config(args)
    if args.command == "error-curve":
        path = write_error_curve(run_error_experiment(config), config.out)
    elif args.command == "embed":
        run_embedding_experiment(config, config.out)
        path = config.out
    else:
        k_max = config.bound_k_max if args.rank_max is None else args.rank_max
        report = verify_bounds(config.bound_n, k_max, config.bound_instances, config.seed)
        path = write_bounds_report(report, config.out)
        if not report.all_passed:
            log.warning("%d bound check(s) failed", report.metadata["failures"])
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDegeneracyError, EigenSolverError) as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
