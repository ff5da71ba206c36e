"""Command line interface.

    rpdist sample   --config cfg.json --out runs/n1024
    rpdist theory   --config cfg.json --curve center --out runs/theory
    rpdist moments  --config cfg.json --out runs/moments
    rpdist compare  --config cfg.json --data runs/n1024 --out runs/fits
    rpdist report   --out runs/fits

Exit codes: 0 success, 2 threshold violation, 3 input or schema error,
4 numerical failure.
"""
import argparse
import glob
import json
import logging
import os
import sys

import numpy as np

from .compare import FitReport
from .errors import AccuracyError, ConvergenceError, DomainError, InputError, ResourceError
from .pipeline import (
    CURVES,
    ExperimentConfig,
    NumericalFailure,
    run_compare,
    run_moments,
    run_sample,
    run_theory,
)

EXIT_OK = 0
EXIT_THRESHOLD = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("rpdist")


def _load_config(args):
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config.master_seed = args.seed
    if args.workers is not None:
        config.worker_count = args.workers
    if args.out is not None:
        config.out_dir = args.out
    for key in ("n", "realizations"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    # re-run validation after overrides
    return ExperimentConfig.from_dict(config.to_dict())


def cmd_sample(args):
    config = _load_config(args)
    result = run_sample(config)
    log.info("sampled %d realisations (%d failed) in %.1f s -> %s", config.realizations,
             len(result.failures), result.wall_time, config.out_dir)
    return EXIT_OK


def cmd_theory(args):
    config = _load_config(args)
    grid = None
    if args.points is not None:
        if args.lo is None or args.hi is None:
            raise InputError("--points needs --lo and --hi")
        grid = np.linspace(args.lo, args.hi, args.points)
    for curve in args.curve:
        run_theory(config, curve, grid, mode=args.mode, energy=args.energy)
        log.info("wrote curve_%s.csv to %s", curve, config.out_dir)
    return EXIT_OK


def cmd_moments(args):
    config = _load_config(args)
    if args.n_list:
        config.n_list = args.n_list
    report = run_moments(config, data_dirs=args.data)
    for row in report.residuals:
        log.info("N=%-6d q=%-6g ratio=%.4g target=%.4g (%s)", row["n"], row["q"],
                 row["ratio"], row["target"], row["target_kind"])
    return EXIT_OK


def cmd_compare(args):
    config = _load_config(args)
    reports, bad = run_compare(config, args.data)
    for rep in reports:
        log.info("%s: chi2/dof=%s ks=%s", rep.name, rep.chi2_per_dof, rep.ks_distance)
    for msg in bad:
        log.error("threshold violated: %s", msg)
    return EXIT_THRESHOLD if bad else EXIT_OK


def cmd_report(args):
    out = args.out or "out"
    paths = sorted(glob.glob(os.path.join(out, "fit_*.json")))
    if not paths:
        raise InputError(f"no fit_*.json files in {out}")
    lines = [f"{'report':<40} {'chi2/dof':>10} {'dof':>6} {'KS':>10}"]
    for path in paths:
        rep = FitReport.read(path)
        chi = "-" if rep.chi2_per_dof is None else f"{rep.chi2_per_dof:.4g}"
        dof = "-" if rep.dof is None else str(rep.dof)
        ks = "-" if rep.ks_distance is None else f"{rep.ks_distance:.4g}"
        lines.append(f"{rep.name:<40} {chi:>10} {dof:>6} {ks:>10}")
        for row in rep.residuals if rep.name in ("moments", "profile") else []:
            lines.append("    " + json.dumps(row, sort_keys=True))
    print("\n".join(lines))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="override master seed")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rpdist", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="simulate and accumulate statistics")
    p.add_argument("--n", type=int, help="override matrix dimension")
    p.add_argument("--realizations", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("theory", parents=[common], help="emit analytic curves")
    p.add_argument("--curve", choices=CURVES, nargs="+", default=["center"])
    p.add_argument("--mode", choices=("unit", "bulk", "tail"), default="bulk")
    p.add_argument("--energy", type=float, default=0.0, help="energy for the general curve")
    p.add_argument("--n", type=int)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("moments", parents=[common], help="moment ratios across N")
    p.add_argument("--n-list", type=int, nargs="+", dest="n_list")
    p.add_argument("--realizations", type=int)
    p.add_argument("--data", nargs="+", help="existing sample directories")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("compare", parents=[common], help="goodness-of-fit reports")
    p.add_argument("--data", nargs="+", required=True, help="sample output directories")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", parents=[common], help="summarise fit reports")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, DomainError, ResourceError, FileNotFoundError, KeyError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except (NumericalFailure, ConvergenceError, AccuracyError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
