"""Search a 2-setting sweep for states steerable AtoB but not BtoA.

With the first two MUBs the one-way direction flips relative to the
4-setting case. Each candidate is re-checked by single-point solves.

    python3 scripts/reversal_sweep.py --grid 7x7
"""

import argparse
import json

from steerkit.cli import SweepSpec, _grid, surface_rows
from steerkit.measurements import mub_settings
from steerkit.states import QutritAngles, qutrit_pes
from steerkit.steering import state_sw


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=_grid, default=(7, 7))
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args(argv)
    spec = SweepSpec(n_theta=args.grid[0], n_phi=args.grid[1], settings=2, tol_p=args.tol)
    ms = mub_settings(3, 2)
    witnesses = []
    for theta, phi, a2b, b2a in surface_rows(spec):
        if a2b is None or (b2a is not None and a2b >= b2a - 5 * args.tol):
            continue
        p = 0.5 * (a2b + (1.0 if b2a is None else b2a))
        rho = qutrit_pes(p, QutritAngles(theta, phi))
        if state_sw(rho, ms, "a2b").steerable and not state_sw(rho, ms, "b2a").steerable:
            witnesses.append(dict(p=p, theta=theta, phi=phi, pstar_a2b=a2b, pstar_b2a=b2a))
    print(json.dumps({"settings": 2, "witnesses": witnesses}, indent=2))


if __name__ == "__main__":
    run()
