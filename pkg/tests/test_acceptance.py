"""End-to-end acceptance criteria, one test per criterion.

Each test prints a ``PASS/FAIL criterion N: ...`` line; the lines are
repeated in the terminal summary. Run with ``pytest tests/test_acceptance.py``.
"""

import json
from functools import partial

import numpy as np
import pytest

from steerkit import cli
from steerkit.cli import FamilySpec, SweepSpec, surface_csv, surface_rows
from steerkit.measurements import mub_settings
from steerkit.sdp import FREE, Status, solve
from steerkit.sdp.io import load_problem
from steerkit.linalg import min_eigenvalue
from steerkit.states import QutritAngles, qutrit_pes
from steerkit.steering import (
    GeneralBoundConfig,
    critical_p,
    loss_counted_sw,
    priori_from_state,
    state_sw,
    unsteerability_q,
)

from conftest import FIXTURES, record_criterion

PLANE = 0.4818
SWEEP = SweepSpec(n_theta=5, n_phi=5, margin=0.02, settings=4, directions="both", tol_p=1e-4)


def _sweep(monkeypatch, spec, threads):
    monkeypatch.setenv("STEERKIT_THREADS", str(threads))
    return surface_rows(spec)


@pytest.fixture(scope="module")
def module_patch():
    mp = pytest.MonkeyPatch()
    yield mp
    mp.undo()


@pytest.fixture(scope="module")
def sweep_4(module_patch):
    rows = _sweep(module_patch, SWEEP, 1)
    return rows, surface_csv(rows).encode()


def test_criterion_1_bta_plane(sweep_4):
    rows, _ = sweep_4
    b2a = np.array([r[3] if r[3] is not None else np.nan for r in rows])
    dev = float(np.nanmax(np.abs(b2a - PLANE))) if not np.isnan(b2a).all() else np.inf
    spread = float(np.nanmax(b2a) - np.nanmin(b2a))
    ok = not np.isnan(b2a).any() and dev <= 2e-3 and spread <= 1e-3
    record_criterion(1, ok, f"5x5 BtoA thresholds max |p*-{PLANE}| = {dev:.2e}, spread = {spread:.2e}")
    assert ok


def test_criterion_2_analytic(capsys):
    expected = {2: (0.5, 0.57735), 3: (0.416667, 0.25), 5: (0.320833, None)}
    errs = []
    for d, (pstar, eta) in expected.items():
        assert cli.main(["analytic", "--dim", str(d)]) == 0
        doc = json.loads(capsys.readouterr().out)
        errs.append(abs(doc["pstar_bta_general"] - pstar))
        if eta is not None:
            errs.append(abs(doc["eta_mub"] - eta))
    ok = max(errs) <= 1e-6
    record_criterion(2, ok, f"analytic thresholds and shrinking factors, max error {max(errs):.1e}")
    assert ok


def test_criterion_3_qubit_bounds(capsys):
    got = {}
    for m in (2, 3):
        assert cli.main(["pstar", "--state", "iso", "--dim", "2", "--settings", str(m), "--direction", "a2b"]) == 0
        got[m] = json.loads(capsys.readouterr().out)["p_star"]
    errs = [abs(got[2] - 1 / np.sqrt(2)), abs(got[3] - 1 / np.sqrt(3))]
    ok = max(errs) <= 2e-3
    record_criterion(3, ok, f"isotropic qubit p* = {got[2]:.5f} (2 settings), {got[3]:.5f} (3 settings)")
    assert ok


def _cheating_lhs_residual(pri, m):
    # strategies answering one setting and null elsewhere, weighted sigma_{a|x0},
    # plus the all-null strategy carrying the remaining (1 - m eps) rho_B
    o = pri.outcomes
    rebuilt = np.zeros_like(pri.members)
    eps = 1.0 - np.trace(pri.members[0, o - 1]).real
    rest = (1.0 - m * eps) * pri.marginals()[0]
    assert min_eigenvalue(rest) >= -1e-12
    rebuilt[:, o - 1] += rest
    for x0 in range(m):
        for a in range(o - 1):
            lam = [o - 1] * m
            lam[x0] = a
            for x in range(m):
                rebuilt[x, lam[x]] += pri.members[x0, a]
    return float(np.max(np.abs(rebuilt - pri.members)))


def test_criterion_4_loss_consistency():
    rng = np.random.default_rng(2024)
    m = 4
    ms = mub_settings(3, m)
    worst_unit, worst_cheat, worst_lhs = 0.0, 0.0, 0.0
    for _ in range(20):
        p = rng.uniform(0.3, 1.0)
        angles = QutritAngles(rng.uniform(0.05, np.pi / 4 - 0.05), rng.uniform(0.05, np.pi / 2 - 0.05))
        direction = rng.choice(["a2b", "b2a"])
        rho = qutrit_pes(p, angles)
        plain = state_sw(rho, ms, direction).sw
        worst_unit = max(worst_unit, abs(loss_counted_sw(rho, ms, direction, 1.0).sw - plain))
        for eps in (1.0 / m, 0.8 / m):
            worst_cheat = max(worst_cheat, loss_counted_sw(rho, ms, direction, eps).sw)
            worst_lhs = max(worst_lhs, _cheating_lhs_residual(priori_from_state(rho, ms, direction, eps), m))
    ok = worst_unit <= 1e-6 and worst_cheat <= 1e-6 and worst_lhs <= 1e-12
    record_criterion(
        4,
        ok,
        f"20 PES points: |sw(eps=1) - sw| <= {worst_unit:.1e}, sw(eps<=1/m) <= {worst_cheat:.1e}, "
        f"explicit LHS residual {worst_lhs:.1e}",
    )
    assert ok


def test_criterion_5_one_way_region(sweep_4):
    rows, _ = sweep_4
    witnesses = [(t, f, a) for t, f, a, _ in rows if a is None or a > PLANE + 0.05]
    best = max(rows, key=lambda r: np.inf if r[2] is None else r[2])
    ok = len(witnesses) >= 1
    record_criterion(5, ok, f"{len(witnesses)} cells with AtoB p* > {PLANE + 0.05:.4f}; max at theta={best[0]:.3f}, phi={best[1]:.3f}: {best[2]}")
    assert ok


def _a2b_threshold(phi, eps):
    family = FamilySpec("pes", 3, theta=np.pi / 4, phi=phi)
    return critical_p(family, "a2b", mub_settings(3, 4), eps=eps, tol_p=1e-4).p_star


def test_criterion_6_loss_tradeoff(module_patch):
    module_patch.setenv("STEERKIT_THREADS", str(cli._threads()))
    phis = [0.9553 + (k - 5) * 0.12 for k in range(11)]
    lossless = np.array(cli._pmap(partial(_a2b_threshold, eps=1.0), phis), dtype=float)
    lossy = np.array(cli._pmap(partial(_a2b_threshold, eps=0.85), phis), dtype=float)
    dominate = bool(np.all(lossy > lossless))
    k_min = int(np.argmin(lossless))
    ok = (
        dominate
        and lossy.min() > PLANE
        and abs(phis[k_min] - 0.9553) <= 0.12 + 1e-9
        and abs(lossless.min() - PLANE) <= 2e-3
    )
    record_criterion(
        6,
        ok,
        f"eps=0.85 dominates eps=1 at {int(np.sum(lossy > lossless))}/11 phi; min eps=0.85 {lossy.min():.5f}; "
        f"min eps=1 {lossless.min():.5f} at phi={phis[k_min]:.4f}",
    )
    assert ok


def test_criterion_7_general_dominance(sweep_4, module_patch):
    rows_sw, _ = sweep_4
    spec = SweepSpec(n_theta=5, n_phi=5, margin=0.02, settings=4, directions="a2b", mode="general", tol_p=1e-4)
    rows_gen = _sweep(module_patch, spec, cli._threads())
    excess = []
    for (t, f, g, _), (_, _, s, _) in zip(rows_gen, rows_sw):
        upper = 1.0 if s is None else s
        excess.append(-np.inf if g is None else g - upper)
    cfg = GeneralBoundConfig.mub(3)
    q = unsteerability_q(qutrit_pes(0.0, QutritAngles(0.3, 0.7)), cfg).q
    gen = [r[2] for r in rows_gen if r[2] is not None]
    ok = max(excess) <= 1e-3 and abs(q - 1.0) <= 1e-6
    record_criterion(
        7,
        ok,
        f"general p* - sw p* <= {max(excess):.2e} over 5x5; general range [{min(gen):.3f}, {max(gen):.3f}]; "
        f"Q(p=0) = {q:.8f}",
    )
    assert ok


def test_criterion_8_reversal(module_patch):
    spec = SweepSpec(n_theta=3, n_phi=3, margin=0.02, settings=2, directions="both", tol_p=1e-3)
    rows = _sweep(module_patch, spec, cli._threads())
    ms = mub_settings(3, 2)
    witness = None
    for t, f, a, b in rows:
        if a is None or (b is not None and a >= b - 5e-3):
            continue
        p = a + 0.5 * ((1.0 if b is None else b) - a)
        rho = qutrit_pes(p, QutritAngles(t, f))
        if state_sw(rho, ms, "a2b").steerable and not state_sw(rho, ms, "b2a").steerable:
            witness = (p, t, f)
            break
    ok = witness is not None
    detail = "no witness" if witness is None else "AtoB steerable, BtoA not at p=%.4f, theta=%.4f, phi=%.4f" % witness
    record_criterion(8, ok, f"2-setting (first two MUBs) sweep: {detail}")
    assert ok


def test_criterion_9_solver_certification():
    files = sorted((FIXTURES / "sdp").glob("*.json"))
    mismatches, worst_obj, worst_gap, n_infeasible = [], 0.0, 0.0, 0
    for path in files:
        oracle = json.loads(path.read_text())["oracle"]
        problem = load_problem(path)
        sol = solve(problem)
        if str(sol.status) != oracle["status"]:
            mismatches.append(path.stem)
            continue
        if sol.status is Status.OPTIMAL:
            worst_obj = max(worst_obj, abs(sol.objective_value - oracle["objective"]) / max(1.0, abs(oracle["objective"])))
            worst_gap = max(worst_gap, sol.gap)
            for bl, X in zip(problem.blocks, sol.blocks):
                if bl.cone != FREE and min_eigenvalue(X) < -1e-8:
                    mismatches.append(path.stem)
        else:
            n_infeasible += 1
    ok = len(files) == 25 and n_infeasible >= 5 and not mismatches and worst_obj <= 1e-6 and worst_gap <= 1e-8
    record_criterion(
        9,
        ok,
        f"{len(files)} fixtures ({n_infeasible} non-optimal), mismatches {mismatches}, "
        f"max objective error {worst_obj:.1e}, max gap {worst_gap:.1e}",
    )
    assert ok


def test_criterion_10_determinism(sweep_4, module_patch):
    _, first = sweep_4
    second = surface_csv(_sweep(module_patch, SWEEP, max(2, cli._threads()))).encode()
    ok = first == second
    record_criterion(10, ok, f"two full 5x5 sweeps (1 and {max(2, cli._threads())} workers) byte-identical: {ok}")
    assert ok
