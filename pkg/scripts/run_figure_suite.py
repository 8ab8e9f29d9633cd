#!/usr/bin/env python3
"""Run the desk-scale reproduction suite: every bundled scenario config.

Usage: python scripts/run_figure_suite.py [--out-root runs] [--seed N]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from vdpsim import cli  # noqa: E402

CONFIGS = [
    "tomo_check.json",
    "meanfield.json",
    "single_vdp_scan.json",
    "limit_cycle.json",
    "sync_classical.json",
    "arnold_quantum.json",
    "sense_quantum.json",
]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-root", default="runs")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()
    root = pathlib.Path(__file__).resolve().parents[1]
    import json
    for name in CONFIGS:
        cfg_path = root / "configs" / name
        scenario = json.loads(cfg_path.read_text())["scenario"]
        out = pathlib.Path(args.out_root) / cfg_path.stem
        argv = [scenario, "--config", str(cfg_path), "--out", str(out)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"\n=== {scenario} ({name}) -> {out}")
        code = cli.main(argv)
        if code != 0:
            print(f"scenario {scenario} exited with {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
