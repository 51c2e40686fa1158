import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steerkit.assemblage import (
    Assemblage,
    Direction,
    filtered_assemblage,
    make_assemblage,
    make_priori,
    priori_from_state,
    validate,
)
from steerkit.linalg import partial_trace
from steerkit.measurements import mub, mub_settings
from steerkit.states import QutritAngles, isotropic_state, qutrit_pes

from conftest import random_density

seeds = st.integers(0, 2**32 - 1)
directions = st.sampled_from([Direction.AtoB, Direction.BtoA])


def test_direction_parse():
    assert Direction.parse("a2b") is Direction.AtoB
    assert Direction.parse("B->A") is Direction.BtoA
    assert Direction.parse(Direction.BtoA) is Direction.BtoA
    with pytest.raises(ValueError):
        Direction.parse("sideways")


@given(seeds, st.sampled_from([2, 3]))
def test_product_state_gives_proportional_members(seed, d):
    rng = np.random.default_rng(seed)
    ra, rb = random_density(rng, d), random_density(rng, d)
    ms = mub(d)
    asm = make_assemblage(np.kron(ra, rb), ms, Direction.AtoB)
    for x in range(ms.settings):
        for a in range(d):
            expected = np.trace(ms.effects[x, a] @ ra).real * rb
            assert np.allclose(asm.members[x, a], expected, atol=1e-12)


def test_maximally_entangled_ricochet():
    ms = mub(3)
    asm = make_assemblage(isotropic_state(3, 1.0), ms, Direction.AtoB)
    assert np.allclose(asm.members, ms.effects.transpose(0, 1, 3, 2) / 3, atol=1e-14)


@given(seeds, st.sampled_from([2, 3]), directions)
def test_marginals_reproduce_reduced_state(seed, d, direction):
    rho = random_density(np.random.default_rng(seed), d * d)
    asm = make_assemblage(rho, mub(d), direction)
    traced = "first" if direction is Direction.AtoB else "second"
    reduced = partial_trace(rho, (d, d), traced)
    assert np.max(np.abs(asm.marginals() - reduced)) <= 1e-10
    assert validate(asm).passed


@given(seeds, st.floats(0, 1), directions)
def test_assemblage_is_linear_in_the_state(seed, p, direction):
    rng = np.random.default_rng(seed)
    r1, r2 = random_density(rng, 9), random_density(rng, 9)
    ms = mub(3)
    mixed = make_assemblage(p * r1 + (1 - p) * r2, ms, direction).members
    combo = p * make_assemblage(r1, ms, direction).members + (1 - p) * make_assemblage(r2, ms, direction).members
    assert np.max(np.abs(mixed - combo)) <= 1e-12


def test_priori_examples():
    rho = qutrit_pes(0.7, QutritAngles(0.3, 0.7))
    ms = mub(3)
    asm = make_assemblage(rho, ms, Direction.AtoB)
    full = priori_from_state(rho, ms, Direction.AtoB, 1.0)
    assert full.outcomes == 4
    assert np.allclose(full.members[:, 3], 0)
    assert np.allclose(full.members[:, :3], asm.members)
    half = priori_from_state(rho, ms, Direction.AtoB, 0.5)
    assert np.allclose(np.trace(half.members[:, 3], axis1=-2, axis2=-1).real, 0.5)
    assert np.allclose(np.trace(half.marginals(), axis1=-2, axis2=-1).real, 1.0)
    assert validate(half).passed


@given(seeds, st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4), directions)
def test_priori_preserves_trace_and_no_signalling(seed, effs, direction):
    rho = random_density(np.random.default_rng(seed), 9)
    ms = mub(3)
    asm = make_assemblage(rho, ms, direction)
    reduced = asm.marginals()[0]
    for eps in (effs[0], effs):
        pri = make_priori(asm, reduced, eps)
        tr = np.trace(pri.marginals(), axis1=-2, axis2=-1).real
        assert np.max(np.abs(tr - 1.0)) <= 1e-12
        assert validate(pri).nosignal_ok


def test_priori_rejects_bad_efficiency():
    asm = make_assemblage(isotropic_state(2, 0.5), mub(2), Direction.AtoB)
    with pytest.raises(ValueError):
        make_priori(asm, np.eye(2) / 2, 0.0)
    with pytest.raises(ValueError):
        make_priori(asm, np.eye(2) / 2, 1.2)
    with pytest.raises(ValueError):
        make_priori(asm, np.eye(3) / 3, 0.5)


def test_validate_flags_failures():
    good = np.array([[np.diag([0.5, 0.0]), np.diag([0.0, 0.5])], [np.diag([0.5, 0.0]), np.diag([0.0, 0.5])]])
    assert validate(Assemblage(good)).passed
    signalling = good.copy()
    signalling[1] = [np.diag([0.3, 0.0]), np.diag([0.0, 0.7])]
    rep = validate(Assemblage(signalling))
    assert not rep.nosignal_ok and rep.psd_ok
    negative = good.copy()
    negative[0, 0] = np.diag([0.501, -1e-3])
    negative[0, 1] = np.diag([-0.001, 0.501])
    rep = validate(Assemblage(negative))
    assert not rep.psd_ok


@given(seeds, directions)
def test_filtered_assemblage_has_maximally_mixed_marginal(seed, direction):
    rho = random_density(np.random.default_rng(seed), 9)
    fasm = filtered_assemblage(make_assemblage(rho, mub(3), direction))
    assert np.allclose(fasm.marginals(), np.eye(3) / 3, atol=1e-10)
    assert validate(fasm).passed


def test_filtered_assemblage_of_pes_is_isotropic():
    # Schmidt filtering on the steered side maps the family onto the isotropic state
    ms = mub_settings(3, 4)
    pes = make_assemblage(qutrit_pes(0.6, QutritAngles(0.2, 0.5)), ms, Direction.BtoA)
    iso = make_assemblage(isotropic_state(3, 0.6), ms, Direction.BtoA)
    assert np.allclose(filtered_assemblage(pes).members, iso.members, atol=1e-12)


def test_filtered_assemblage_of_singular_marginal():
    asm = make_assemblage(qutrit_pes(1.0, QutritAngles(0.0, 0.0)), mub(3), Direction.AtoB)
    assert filtered_assemblage(asm) is None
