"""Command-line front end: crt-lab <experiment> [flags].

Exit codes: 0 all statistics passed, 1 statistical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .harness import (
    EXPERIMENT_NAMES,
    UsageError,
    default_config,
    load_config_file,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crt-lab",
        description="Seeded simulation experiments on excursion-coded random trees.",
    )
    parser.add_argument("experiment", choices=EXPERIMENT_NAMES, metavar="experiment",
                        help="one of: " + ", ".join(EXPERIMENT_NAMES))
    parser.add_argument("--n", type=int, help="grid resolution (power of two, default 16384)")
    parser.add_argument("--replicas", type=int, help="replica / tree count")
    parser.add_argument("--marks", type=int, help="marked points per extracted tree")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--out", help="output directory (default $CRT_LAB_OUT/<experiment>)")
    parser.add_argument("--threads", type=int,
                        help="worker processes (default: available parallelism)")
    parser.add_argument("--config", help="flat key=value config file; flags win")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings: dict = {}
        if args.config:
            settings.update(load_config_file(args.config))
        for key in ("n", "replicas", "marks", "seed", "out", "threads"):
            value = getattr(args, key)
            if value is not None:
                settings[key] = value
        settings.setdefault("threads", os.cpu_count() or 1)
        config = default_config(args.experiment, **settings)
        report = run_experiment(config)
    except UsageError as exc:
        print(f"crt-lab: error: {exc}", file=sys.stderr)
        return 2

    for row in report.rows:
        flag = "PASS" if row.passed else "FAIL"
        print(f"[{flag}] {row.statistic}: value={row.value:.6g} target={row.target:.6g} "
              f"tol={row.tolerance:.3g} ({row.provenance})")
    print(f"{config.experiment}: {'all passed' if report.passed else 'FAILURES'} "
          f"in {report.wall_clock:.1f}s; replicas={config.replicas} seed={config.seed}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
