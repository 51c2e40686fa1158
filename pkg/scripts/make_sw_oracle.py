"""Steering-weight regression constants from an independent cvxpy formulation.

The program is written directly from the LHS decomposition
``sigma_{a|x} = sum_lam D(a|x,lam) sigma_lam + (1 - mu) tau_{a|x}`` with the
response function rebuilt here (no toolkit code except state/measurement
constructors). Writes ``tests/fixtures/sw_oracle.json``.

    python scripts/make_sw_oracle.py
"""

import itertools
import json
import pathlib

import cvxpy as cp
import numpy as np

from steerkit.assemblage import make_assemblage
from steerkit.measurements import mub_settings
from steerkit.states import QutritAngles, isotropic_state, qutrit_pes

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "sw_oracle.json"


def oracle_sw(members):
    m, o, n, _ = members.shape
    strategies = list(itertools.product(range(o), repeat=m))
    sig = [cp.Variable((n, n), hermitian=True) for _ in strategies]
    cons = [s >> 0 for s in sig]
    for x in range(m):
        for a in range(o):
            lhs = sum(s for s, lam in zip(sig, strategies) if lam[x] == a)
            cons.append(members[x, a] - lhs >> 0)
    prob = cp.Problem(cp.Maximize(sum(cp.real(cp.trace(s)) for s in sig)), cons)
    for t in (1e-9, 1e-8, None):
        opts = {} if t is None else dict(tol_gap_abs=t, tol_gap_rel=t, tol_feas=t)
        prob.solve(solver=cp.CLARABEL, **opts)
        if prob.status == cp.OPTIMAL:
            break
    return 1.0 - float(prob.value), prob.status


CASES = {
    "iso2_p1_m2": dict(family="iso", dim=2, p=1.0, settings=2, direction="a2b"),
    "iso2_p1_m3": dict(family="iso", dim=2, p=1.0, settings=3, direction="a2b"),
    "iso2_p0.8_m2": dict(family="iso", dim=2, p=0.8, settings=2, direction="a2b"),
    "iso2_p0.8_m3": dict(family="iso", dim=2, p=0.8, settings=3, direction="a2b"),
    "iso3_p0.7_m4": dict(family="iso", dim=3, p=0.7, settings=4, direction="a2b"),
    "pes3_p0.9_a2b": dict(family="pes", dim=3, p=0.9, theta=0.3, phi=0.7, settings=4, direction="a2b"),
    "pes3_p0.9_b2a": dict(family="pes", dim=3, p=0.9, theta=0.3, phi=0.7, settings=4, direction="b2a"),
    "pes3_p0.6_m2_a2b": dict(family="pes", dim=3, p=0.6, theta=0.6, phi=1.2, settings=2, direction="a2b"),
}


def build_state(case):
    if case["family"] == "iso":
        return isotropic_state(case["dim"], case["p"])
    return qutrit_pes(case["p"], QutritAngles(case["theta"], case["phi"]))


def main():
    doc = {"cvxpy": cp.__version__, "cases": {}}
    for name, case in CASES.items():
        asm = make_assemblage(build_state(case), mub_settings(case["dim"], case["settings"]), case["direction"])
        sw, status = oracle_sw(asm.members)
        print(f"{name:20s} {status:10s} {sw:.9f}")
        doc["cases"][name] = dict(case, sw=sw)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
