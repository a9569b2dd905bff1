"""Command-line entry point.

Verbs: ``run <config>``, ``sweep <config> --i-min --i-max [--decays]``,
``verify <suite>``, ``list-presets``.  ``<config>`` is a file path or a
packaged preset name.  Output files land in ``--output-dir`` if given, else
``$DAGRAD_OUTPUT_DIR``, else the working directory.
"""

from __future__ import annotations

import argparse
import sys

from .backend import backend_name
from .config import ConfigError, list_presets, load_config, resolve_config_arg
from .runner import grid_sweep, run_config
from .verification import SUITES, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dagrad",
        description="Deterministic optimizer benchmark and theory-check harness")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a seeded experiment config")
    p_run.add_argument("config", help="config file path or preset name")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--workers", type=int, default=1)

    p_sweep = sub.add_parser("sweep", help="learning-rate/decay grid sweep")
    p_sweep.add_argument("config", help="config file path or preset name")
    p_sweep.add_argument("--i-min", type=int, required=True,
                         help="smallest base-10 exponent of the LR grid")
    p_sweep.add_argument("--i-max", type=int, required=True,
                         help="largest base-10 exponent of the LR grid")
    p_sweep.add_argument("--decays", default="0.0",
                         help="comma-separated weight-decay values")
    p_sweep.add_argument("--output-dir", default=None)
    p_sweep.add_argument("--workers", type=int, default=1)

    p_verify = sub.add_parser("verify", help="run theory verification suites")
    p_verify.add_argument("suite", help=f"one of {sorted(SUITES) + ['all']}")

    sub.add_parser("list-presets", help="list packaged experiment presets")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = load_config(resolve_config_arg(args.config))
            records, _, csv_path = run_config(cfg, output_dir=args.output_dir,
                                              workers=args.workers)
            n_div = sum(1 for r in records if r.diverged)
            total = sum(r.wall_time for r in records)
            print(f"{len(records)} seeds, {n_div} diverged, "
                  f"{total:.2f}s total ({backend_name()} backend)")
            print(f"wrote {csv_path}")
            return 0 if n_div == 0 else 2
        if args.verb == "sweep":
            cfg = load_config(resolve_config_arg(args.config))
            decays = tuple(float(t) for t in args.decays.split(","))
            rows = grid_sweep(cfg, args.i_min, args.i_max, decays=decays,
                              output_dir=args.output_dir, workers=args.workers)
            print(f"{'lr':>10} {'decay':>10} {'final-subopt':>14} "
                  f"{'2se':>10} {'div':>4} best")
            for r in rows:
                print(f"{r.lr:>10g} {r.decay:>10g} {r.final_subopt_mean:>14.6g} "
                      f"{r.final_subopt_se2:>10.3g} {r.diverged_seeds:>4} "
                      f"{'*' if r.best else ''}")
            return 0
        if args.verb == "verify":
            _, report, code = run_suite(args.suite)
            print(report)
            return code
        if args.verb == "list-presets":
            for name, desc in list_presets():
                print(f"{name:<28} {desc}")
            return 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
