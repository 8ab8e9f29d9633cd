"""Command-line entry point.

One subcommand per scenario, each taking --config <path> plus overrides:

    vdpsim sync --config configs/sync_classical.json --seed 7 --out runs/s7

Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
failing stage is named in the manifest of the run directory).
"""

from __future__ import annotations

import argparse
import sys

from .config import SCENARIOS, load_config, with_overrides
from .errors import ConfigError, VdpError
from .harness import run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vdpsim",
        description="Coupled quantum van der Pol oscillator simulator")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--engine", choices=("effective", "stroboscopic"),
                       default=None, help="override the dynamics engine")
        p.add_argument("--shots", type=int, default=None,
                       help="override readout shots (0 = exact)")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, seed=args.seed, engine=args.engine,
                             shots=args.shots, output_dir=args.out,
                             workers=args.workers)
        if cfg.scenario != args.scenario:
            raise ConfigError(
                f"config is for scenario {cfg.scenario!r}, command was "
                f"{args.scenario!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        ctx = run_scenario(cfg)
    except VdpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for name in sorted(ctx.checks):
        print(f"[{'pass' if ctx.checks[name] else 'FAIL'}] {name}")
    print(f"artifacts: {ctx.dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
