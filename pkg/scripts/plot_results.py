#!/usr/bin/env python3
"""Render the CSV artifacts of a run directory (untested convenience).

Usage: python scripts/plot_results.py runs/sync-classical [--out plots]
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np  # noqa: E402

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover
    sys.exit("matplotlib not available; this helper is optional")

from vdpsim.tomography import Grid2D  # noqa: E402


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("run_dir")
    parser.add_argument("--out", default=None)
    args = parser.parse_args()
    run = pathlib.Path(args.run_dir)
    out = pathlib.Path(args.out) if args.out else run / "plots"
    out.mkdir(parents=True, exist_ok=True)
    for path in sorted(run.glob("*.csv")):
        head = path.open().readline()
        if not head.startswith("# grid2d"):
            continue
        grid = Grid2D.from_csv(path)
        fig, ax = plt.subplots(figsize=(4, 3.4))
        vals = np.real(grid.values)
        ax.imshow(vals.T, origin="lower", aspect="equal", cmap="RdBu_r",
                  extent=(grid.axis1[0], grid.axis1[1],
                          grid.axis2[0], grid.axis2[1]),
                  vmin=-np.abs(vals).max(), vmax=np.abs(vals).max())
        ax.set_xlabel(grid.label1)
        ax.set_ylabel(grid.label2)
        ax.set_title(path.stem)
        fig.tight_layout()
        fig.savefig(out / f"{path.stem}.png", dpi=150)
        plt.close(fig)
        print(f"wrote {out / (path.stem + '.png')}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
