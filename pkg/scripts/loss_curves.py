"""Isotropic thresholds versus heralding efficiency for several setting counts.

Writes one CSV per (dim, settings) pair; rows with eps <= 1/settings have an
empty threshold because the cheating LHS model reproduces any assemblage there.

    python3 scripts/loss_curves.py --out-dir data/loss
"""

import argparse
import pathlib

import numpy as np

from steerkit.cli import _atomic_write, _fmt, losscurve_rows

PAIRS = [(2, 2), (2, 3), (3, 2), (3, 3), (3, 4)]


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=26)
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--out-dir", default="data/loss")
    args = ap.parse_args(argv)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    eps_grid = [float(e) for e in np.linspace(1.0, 0.25, args.points)]
    for d, m in PAIRS:
        rows = losscurve_rows(d, m, eps_grid, tol=args.tol)
        text = "epsilon,p_star\n" + "".join(f"{e:.6f},{_fmt(p)}\n" for e, p in rows)
        path = out / f"iso_d{d}_m{m}.csv"
        _atomic_write(str(path), text)
        print(path)


if __name__ == "__main__":
    run()
