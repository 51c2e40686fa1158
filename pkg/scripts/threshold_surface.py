"""Two-qutrit threshold surface over (theta, phi), both steering directions.

    python3 scripts/threshold_surface.py --grid 21x21 --out data/surface_4mub.csv
    python3 scripts/threshold_surface.py --mode general --directions a2b --out data/surface_general.csv

Thin wrapper over ``steerkit surface``; set STEERKIT_THREADS to parallelize.
"""

import argparse
import pathlib
import sys

from steerkit.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default="21x21")
    ap.add_argument("--settings", type=int, default=4)
    ap.add_argument("--mode", choices=("sw", "general"), default="sw")
    ap.add_argument("--directions", default="both")
    ap.add_argument("--tol", default="1e-4")
    ap.add_argument("--out", default="data/surface.csv")
    args = ap.parse_args(argv)
    pathlib.Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    return main(
        [
            "surface",
            "--grid", args.grid,
            "--settings", str(args.settings),
            "--mode", args.mode,
            "--directions", args.directions,
            "--tol", args.tol,
            "--out", args.out,
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
