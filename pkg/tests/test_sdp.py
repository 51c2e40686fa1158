import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steerkit.linalg import min_eigenvalue
from steerkit.sdp import FREE, BlockSdpProblem, BlockSpec, Status, solve
from steerkit.sdp.io import dump_problem, load_problem, problem_from_dict, problem_to_dict, solution_to_dict

from conftest import FIXTURES, random_hermitian

FIXTURE_FILES = sorted((FIXTURES / "sdp").glob("*.json"))
OBJ_TOL = 1e-6
GAP_TOL = 1e-8


def _problem(blocks, objective, constraints):
    return BlockSdpProblem.from_operators(blocks, objective, constraints)


def test_fixture_suite_shape():
    docs = [json.loads(p.read_text()) for p in FIXTURE_FILES]
    assert len(docs) == 25
    infeasible = [d for d in docs if d["oracle"]["status"] != "optimal"]
    assert len(infeasible) >= 5


@pytest.mark.parametrize("path", FIXTURE_FILES, ids=lambda p: p.stem)
def test_fixture_matches_oracle(path):
    doc = json.loads(path.read_text())
    oracle = doc["oracle"]
    sol = solve(load_problem(path))
    assert str(sol.status) == oracle["status"]
    if oracle["status"] == "optimal":
        rel = abs(sol.objective_value - oracle["objective"]) / max(1.0, abs(oracle["objective"]))
        assert rel <= OBJ_TOL
        assert sol.gap <= GAP_TOL
        assert sol.primal_residual <= GAP_TOL and sol.dual_residual <= GAP_TOL
        problem = load_problem(path)
        for bl, X in zip(problem.blocks, sol.blocks):
            if bl.cone != FREE:
                assert min_eigenvalue(X) >= -1e-8
    else:
        assert sol.certificate is not None and sol.certificate["margin"] > 0


@pytest.mark.filterwarnings("ignore::UserWarning")
@pytest.mark.parametrize("path", FIXTURE_FILES[:6], ids=lambda p: p.stem)
def test_fixture_against_live_oracle(path):
    cp = pytest.importorskip("cvxpy")
    problem = load_problem(path)
    objective, constraints = problem.to_operators()
    X = [cp.Variable((bl.size, bl.size), hermitian=True) for bl in problem.blocks]
    cons = [X[k] >> 0 for k, bl in enumerate(problem.blocks) if bl.cone != FREE]
    for coeffs, rhs in constraints:
        cons.append(sum(cp.real(cp.trace(np.asarray(m) @ X[k])) for k, m in coeffs.items()) == rhs)
    obj = sum(cp.real(cp.trace(np.asarray(c) @ X[k])) for k, c in enumerate(objective) if c is not None)
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    sol = solve(problem)
    if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        assert sol.status is Status.OPTIMAL
        assert abs(sol.objective_value - prob.value) <= 1e-5 * max(1.0, abs(prob.value))
    elif prob.status == cp.INFEASIBLE:
        assert sol.status is Status.PRIMAL_INFEASIBLE


def test_diagonal_completion():
    e00, e11 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    sol = solve(_problem([BlockSpec(2)], [np.eye(2)], [({0: e00}, 1.0), ({0: e11}, 2.0)]))
    assert sol.optimal
    assert sol.objective_value == pytest.approx(3.0, abs=1e-7)
    assert np.allclose(np.diag(sol.blocks[0]).real, [1.0, 2.0], atol=1e-7)


def test_eigenvalue_extremum():
    sol = solve(_problem([BlockSpec(2)], [np.diag([1.0, -1.0])], [({0: np.eye(2)}, 1.0)]))
    assert sol.objective_value == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(sol.blocks[0], np.diag([1.0, 0.0]), atol=1e-6)


def test_contradictory_traces_give_certificate():
    sol = solve(_problem([BlockSpec(2)], None, [({0: np.eye(2)}, 1.0), ({0: np.eye(2)}, 2.0)]))
    assert sol.status is Status.PRIMAL_INFEASIBLE
    assert sol.certificate["kind"] == "farkas"
    assert sol.certificate["residual"] <= 1e-12


def test_negative_trace_is_infeasible_with_dual_ray():
    sol = solve(_problem([BlockSpec(3)], [np.eye(3)], [({0: np.eye(3)}, -1.0)]))
    assert sol.status is Status.PRIMAL_INFEASIBLE
    assert sol.certificate["kind"] == "dual-ray"
    # y with b'y = 1 and A'y negative semidefinite
    assert sol.y[0] * -1.0 == pytest.approx(1.0)


def test_unbounded_program():
    # maximize trace(X) with only an off-diagonal constraint
    off = np.array([[0.0, 1.0], [1.0, 0.0]])
    sol = solve(_problem([BlockSpec(2)], [np.eye(2)], [({0: off}, 0.5)]))
    assert sol.status is Status.DUAL_INFEASIBLE
    assert sol.certificate["kind"] == "primal-ray"


def test_free_block_only():
    # maximize <C, Y> over free Y with A(Y) fixing every coordinate
    rng = np.random.default_rng(3)
    target = random_hermitian(rng, 2)
    basis = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]])]
    cons = [({0: b}, np.trace(b @ target).real) for b in basis]
    sol = solve(_problem([BlockSpec(2, FREE)], [np.eye(2)], cons))
    assert sol.optimal
    assert np.allclose(sol.blocks[0], target, atol=1e-7)


def test_complex_coefficients_are_respected():
    # maximize <sigma_y, X> with trace(X) = 1: optimum 1 on the y eigenvector
    sy = np.array([[0, -1j], [1j, 0]])
    sol = solve(_problem([BlockSpec(2)], [sy], [({0: np.eye(2)}, 1.0)]))
    assert sol.objective_value == pytest.approx(1.0, abs=1e-7)
    v = np.array([1, 1j]) / np.sqrt(2)
    assert np.allclose(sol.blocks[0], np.outer(v, v.conj()), atol=1e-6)


def _random_feasible(seed, k=3, n_con=6):
    rng = np.random.default_rng(seed)
    blocks = [BlockSpec(int(rng.integers(1, 4)), FREE if rng.random() < 0.2 else "psd") for _ in range(k)]
    A = [[random_hermitian(rng, bl.size) for bl in blocks] for _ in range(n_con)]
    X0 = []
    for bl in blocks:
        g = rng.normal(size=(bl.size, bl.size)) + 1j * rng.normal(size=(bl.size, bl.size))
        X0.append(g @ g.conj().T + 0.1 * np.eye(bl.size))
    b = [sum(np.trace(a @ x).real for a, x in zip(row, X0)) for row in A]
    y0 = rng.normal(size=n_con)
    C = []
    for j, bl in enumerate(blocks):
        aty = sum(y0[i] * A[i][j] for i in range(n_con))
        g = rng.normal(size=(bl.size, bl.size)) + 1j * rng.normal(size=(bl.size, bl.size))
        C.append(aty - (g @ g.conj().T + 0.1 * np.eye(bl.size)) if bl.cone != FREE else aty)
    return _problem(blocks, C, [(dict(enumerate(row)), r) for row, r in zip(A, b)])


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_weak_duality_and_psd_output(seed):
    problem = _random_feasible(seed)
    sol = solve(problem)
    assert sol.status is Status.OPTIMAL
    assert sol.dual_value >= sol.objective_value - 1e-9 * max(1.0, abs(sol.objective_value))
    for bl, X in zip(problem.blocks, sol.blocks):
        if bl.cone != FREE:
            assert min_eigenvalue(X) >= -1e-8


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_scaling_preserves_status_and_scales_objective(seed):
    problem = _random_feasible(seed)
    base, scaled = solve(problem), solve(problem.scaled(10.0))
    assert base.status == scaled.status
    # X scales with b and the objective picks up the factor from C as well
    assert scaled.objective_value == pytest.approx(100.0 * base.objective_value, rel=1e-6, abs=1e-6)


def test_solver_is_deterministic():
    problem = _random_feasible(11)
    a, b = solve(problem), solve(problem)
    assert a.objective_value == b.objective_value and a.iterations == b.iterations
    assert all(np.array_equal(x, y) for x, y in zip(a.blocks, b.blocks))


def test_infeasibility_survives_scaling():
    problem = load_problem(FIXTURES / "sdp" / "random_infeasible_00.json")
    assert solve(problem.scaled(10.0)).status is Status.PRIMAL_INFEASIBLE


def test_json_round_trip(tmp_path):
    problem = _random_feasible(5)
    again = problem_from_dict(json.loads(json.dumps(problem_to_dict(problem))))
    assert np.allclose(again.A.toarray(), problem.A.toarray())
    assert np.allclose(again.b, problem.b) and np.allclose(again.c, problem.c)
    path = tmp_path / "p.json"
    dump_problem(problem, path, note="x")
    assert solve(load_problem(path)).objective_value == pytest.approx(solve(problem).objective_value)
    out = solution_to_dict(solve(problem))
    json.dumps(out)
    assert out["status"] == "optimal" and len(out["blocks"]) == len(problem.blocks)


def test_problem_validation():
    with pytest.raises(ValueError):
        BlockSpec(0)
    with pytest.raises(ValueError):
        BlockSpec(2, "cone")
    with pytest.raises(ValueError):
        _problem([BlockSpec(2)], None, [({0: np.array([[0, 1], [0, 0]])}, 1.0)])
    with pytest.raises(ValueError):
        _problem([BlockSpec(2)], None, [({0: np.eye(3)}, 1.0)])
    with pytest.raises(ValueError):
        _problem([BlockSpec(2)], None, [({0: np.eye(2)}, np.inf)])
    with pytest.raises(ValueError):
        problem_from_dict({"blocks": [{"size": 2}], "constraints": [{"coeffs": [{"block": 3, "matrix": []}], "rhs": 1}]})
