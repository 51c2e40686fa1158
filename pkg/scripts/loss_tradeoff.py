"""AtoB thresholds along phi at theta = pi/4 for several heralding efficiencies.

The BtoA side stays on the isotropic plane, so any efficiency whose whole
AtoB curve lies above it leaves the state one-way steerable.

    python3 scripts/loss_tradeoff.py --eps 1,0.95,0.9,0.85 --out data/tradeoff.csv
"""

import argparse
import pathlib
from functools import partial

import numpy as np

from steerkit.cli import FamilySpec, _atomic_write, _fmt, _pmap
from steerkit.measurements import mub_settings
from steerkit.steering import critical_p


def threshold(phi, eps, settings, tol):
    family = FamilySpec("pes", 3, theta=np.pi / 4, phi=phi)
    return critical_p(family, "a2b", mub_settings(3, settings), eps=eps, tol_p=tol).p_star


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="1,0.95,0.9,0.85")
    ap.add_argument("--n-phi", type=int, default=41)
    ap.add_argument("--settings", type=int, default=4)
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--out", default="data/tradeoff.csv")
    args = ap.parse_args(argv)
    effs = [float(e) for e in args.eps.split(",")]
    phis = [float(f) for f in np.linspace(0.02, np.pi / 2 - 0.02, args.n_phi)]
    cols = [_pmap(partial(threshold, eps=e, settings=args.settings, tol=args.tol), phis) for e in effs]
    header = "phi," + ",".join(f"pstar_eps{e:g}" for e in effs)
    lines = [header] + [f"{phi:.6f}," + ",".join(_fmt(c[i]) for c in cols) for i, phi in enumerate(phis)]
    pathlib.Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(args.out, "\n".join(lines) + "\n")
    print(args.out)


if __name__ == "__main__":
    run()
