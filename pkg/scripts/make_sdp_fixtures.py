"""Generate the solver fixture suite with an independent conic solver (cvxpy).

Writes ``tests/fixtures/sdp/*.json``: each file holds a problem in the
solver's JSON format plus the oracle verdict. Run once; outputs are
committed. Requires cvxpy with Clarabel (falls back to SCS).

    python scripts/make_sdp_fixtures.py
"""

import json
import pathlib

import cvxpy as cp
import numpy as np

from steerkit.sdp import BlockSdpProblem, BlockSpec
from steerkit.sdp.io import problem_to_dict

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "sdp"


def rand_herm(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def rand_pd(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return g @ g.conj().T / n + 0.1 * np.eye(n)


def random_blocks(rng, k=5, free_prob=0.2):
    return [BlockSpec(int(rng.integers(1, 5)), "free" if rng.random() < free_prob else "psd") for _ in range(k)]


def random_feasible(rng, n_con=20):
    """Strictly primal and dual feasible, hence with a finite optimum."""
    blocks = random_blocks(rng)
    A = [[rand_herm(rng, bl.size) for bl in blocks] for _ in range(n_con)]
    X0 = [rand_pd(rng, bl.size) for bl in blocks]
    b = [sum(np.trace(a @ x).real for a, x in zip(row, X0)) for row in A]
    y0 = rng.normal(size=n_con)
    C = []
    for k, bl in enumerate(blocks):
        aty = sum(y0[j] * A[j][k] for j in range(n_con))
        C.append(aty - rand_pd(rng, bl.size) if bl.cone == "psd" else aty)
    return blocks, [0.1 * c for c in C], A, b


def random_infeasible(rng, n_con=20):
    """Primal infeasible by construction: sum_j y_j A_j = -P (PSD), 0 (free), b'y = 1."""
    blocks = random_blocks(rng)
    A = [[rand_herm(rng, bl.size) for bl in blocks] for _ in range(n_con)]
    y = rng.normal(size=n_con)
    y[-1] = 1.0 + abs(y[-1])
    for k, bl in enumerate(blocks):
        partial = sum(y[j] * A[j][k] for j in range(n_con - 1))
        target = -rand_pd(rng, bl.size) if bl.cone == "psd" else np.zeros((bl.size, bl.size))
        A[-1][k] = (target - partial) / y[-1]
    b = list(rng.normal(size=n_con))
    b[-1] = (1.0 - float(np.dot(y[:-1], b[:-1]))) / y[-1]
    # strictly dual feasible objective, so the verdict is unambiguous
    y0 = rng.normal(size=n_con)
    C = []
    for k, bl in enumerate(blocks):
        aty = sum(y0[j] * A[j][k] for j in range(n_con))
        C.append(aty - rand_pd(rng, bl.size) if bl.cone == "psd" else aty)
    return blocks, C, A, b


def random_unbounded(rng, n_con=8):
    """Feasible with a PSD recession direction improving the objective."""
    blocks = [BlockSpec(int(rng.integers(2, 5))) for _ in range(3)]
    Dir = [rand_pd(rng, bl.size) for bl in blocks]
    nd = sum(np.trace(d @ d).real for d in Dir)
    A = []
    for _ in range(n_con):
        row = [rand_herm(rng, bl.size) for bl in blocks]
        proj = sum(np.trace(a @ d).real for a, d in zip(row, Dir)) / nd
        A.append([a - proj * d for a, d in zip(row, Dir)])
    X0 = [rand_pd(rng, bl.size) for bl in blocks]
    b = [sum(np.trace(a @ x).real for a, x in zip(row, X0)) for row in A]
    C = [d + 0.1 * rand_herm(rng, d.shape[0]) for d in Dir]
    return blocks, C, A, b


def hand_written():
    e00, e11 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    out = {
        "diag_completion": ([BlockSpec(2)], [np.eye(2)], [[e00], [e11]], [1.0, 2.0]),
        "eigen_extremum": ([BlockSpec(2)], [np.diag([1.0, -1.0])], [[np.eye(2)]], [1.0]),
        "trace_contradiction": ([BlockSpec(2)], [np.diag([1.0, -1.0])], [[np.eye(2)], [np.eye(2)]], [1.0, 2.0]),
        "negative_trace": ([BlockSpec(3)], [np.eye(3)], [[np.eye(3)]], [-1.0]),
        "free_and_psd": (
            [BlockSpec(2, "free"), BlockSpec(2)],
            [np.diag([1.0, 0.0]), np.eye(2) * -1.0],
            [
                [np.eye(2), np.eye(2)],
                [np.array([[0, 1], [1, 0]]), None],
                [np.array([[0, -1j], [1j, 0]]), None],
                [np.diag([1.0, -1.0]), None],
            ],
            [1.0, 0.3, 0.2, 0.1],
        ),
    }
    return out


def build(blocks, C, A, b):
    cons = [({k: a for k, a in enumerate(row) if a is not None}, rhs) for row, rhs in zip(A, b)]
    return BlockSdpProblem.from_operators(blocks, C, cons, tol=1e-9)


def oracle(problem):
    objective, constraints = problem.to_operators()
    X = [cp.Variable((bl.size, bl.size), hermitian=True) for bl in problem.blocks]
    cons = [X[k] >> 0 for k, bl in enumerate(problem.blocks) if bl.cone == "psd"]
    for coeffs, rhs in constraints:
        cons.append(sum(cp.real(cp.trace(m @ X[k])) for k, m in coeffs.items()) == rhs)
    obj = sum(cp.real(cp.trace(c @ X[k])) for k, c in enumerate(objective) if c is not None)
    prob = cp.Problem(cp.Maximize(obj if not isinstance(obj, int) else cp.Constant(0)), cons)
    # Clarabel reports "inaccurate" below ~1e-9, so step the tolerance down
    attempts = [("CLARABEL", dict(tol_gap_abs=t, tol_gap_rel=t, tol_feas=t, max_iter=300)) for t in (1e-9, 1e-8)]
    attempts += [("CLARABEL", {}), ("SCS", dict(eps=1e-9, max_iters=200000))]
    for solver, opts in attempts:
        try:
            prob.solve(solver=solver, **opts)
        except cp.SolverError:
            continue
        if prob.status in (cp.OPTIMAL, cp.INFEASIBLE, cp.UNBOUNDED):
            break
    status = {
        cp.OPTIMAL: "optimal",
        cp.INFEASIBLE: "primal-infeasible",
        cp.UNBOUNDED: "dual-infeasible",
    }.get(prob.status, prob.status)
    value = float(prob.value) if status == "optimal" else None
    return {"status": status, "objective": value, "solver": solver, "cvxpy": cp.__version__}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240917)
    cases = dict(hand_written())
    for i in range(16):
        cases[f"random_feasible_{i:02d}"] = random_feasible(rng)
    for i in range(3):
        cases[f"random_infeasible_{i:02d}"] = random_infeasible(rng)
    cases["random_unbounded_00"] = random_unbounded(rng)
    for name, data in cases.items():
        problem = build(*data)
        verdict = oracle(problem)
        print(f"{name:24s} {verdict['status']:18s} {verdict['objective']}")
        doc = {"name": name, "oracle": verdict, "problem": problem_to_dict(problem)}
        with open(OUT / f"{name}.json", "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")


if __name__ == "__main__":
    main()
