from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhm.algebra import (
    adjoint,
    apply,
    apply_blocks,
    bloch_period,
    block_operator,
    fibre_spectrum_min,
    identity_element,
    op_norm,
    op_norm_report,
    orbit_representatives,
    stack_norm_report,
    star,
    star_with_loss,
    truncated_norm,
)
from qhm.core import Grid, ManifoldParams, random_element, random_state, single_slice

P, G = ManifoldParams(), Grid()
seeds = st.integers(0, 10_000)


def rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def test_identity_acts_trivially():
    one = identity_element(P, G)
    xi = random_state(P, G, 0)
    assert np.allclose(apply(one, xi).values, xi.values, atol=1e-14)
    assert op_norm(one) == pytest.approx(1.0, abs=1e-12)
    assert op_norm((2 - 1j) * one) == pytest.approx(math.sqrt(5), abs=1e-12)


def test_block_operator_entry_formula():
    e = random_element(P, G, 1)
    B = block_operator(e)
    # M[p, p - q] = Phi(x - hbar (q - 2p) mu, y - hbar (q - 2p) nu, q); with q = 2p the shift vanishes
    for p in (-2, 0, 1, 2):
        q = 2 * p
        assert np.array_equal(B[:, :, p + G.p_max, p - q + G.p_max], e.slice(q))


def test_apply_matches_blocks():
    e, xi = random_element(P, G, 2), random_state(P, G, 2)
    assert rel(apply(e, xi).values, apply_blocks(block_operator(e), xi).values) < 1e-12


@settings(max_examples=10, deadline=None)
@given(seeds, seeds)
def test_star_is_composition(s1, s2):
    a = random_element(P, G, s1, support=2)
    b = random_element(P, G, s2, support=2)
    wide = 2 * G.p_max
    inner = slice(wide - G.p_max, wide + G.p_max + 1)
    lhs = block_operator(star(a, b), wide)[..., inner, inner]
    rhs = (block_operator(a, wide) @ block_operator(b, wide))[..., inner, inner]
    assert rel(lhs, rhs) < 1e-9


def test_star_reports_clipped_mass():
    a = random_element(P, G, 3)
    _, loss = star_with_loss(a, a)
    assert loss > 0
    _, none = star_with_loss(random_element(P, G, 3, support=2), random_element(P, G, 4, support=2))
    assert none == 0.0


def test_star_unit_and_associativity():
    one = identity_element(P, G)
    a, b, c = (random_element(P, G, s, support=1) for s in (5, 6, 7))
    assert rel(star(a, one).values, a.values) < 1e-12
    assert rel(star(one, a).values, a.values) < 1e-12
    assert rel(star(a, star(b, c)).values, star(star(a, b), c).values) < 1e-9


@settings(max_examples=15, deadline=None)
@given(seeds, seeds)
def test_adjoint_properties(s1, s2):
    a = random_element(P, G, s1, support=2)
    b = random_element(P, G, s2, support=2)
    assert np.array_equal(adjoint(adjoint(a)).values, a.values)
    assert rel(adjoint(1j * a).values, (-1j * adjoint(a)).values) < 1e-15
    assert rel(adjoint(star(a, b)).values, star(adjoint(b), adjoint(a)).values) < 1e-9
    B = block_operator(a)
    assert rel(block_operator(adjoint(a)), np.conj(np.swapaxes(B, -1, -2))) < 1e-12


def test_bloch_config_detection():
    assert bloch_period(P, G) == (8, 1, 1)
    assert len(orbit_representatives(P, G)[0]) == 32
    assert bloch_period(ManifoldParams(mu=0.3), G) is None


def test_exact_norm_bounds_compressions():
    e = random_element(P, G, 0)
    exact = op_norm_report(e)
    assert exact.exact_fibres and exact.converged
    comp = [op_norm_report(e, band=b).value for b in (G.p_max, 24, 48)]
    assert truncated_norm(e) == pytest.approx(comp[0])
    assert comp[0] <= comp[1] <= comp[2] <= exact.value + 1e-12
    assert exact.value - comp[2] < 1e-4


def test_power_method_agrees():
    e = random_element(P, G, 1)
    assert op_norm(e, "power") == pytest.approx(op_norm(e), rel=1e-9)


def test_noncommensurate_fallback():
    prm = ManifoldParams(mu=0.3)
    r = op_norm_report(random_element(prm, G, 0))
    assert not r.exact_fibres and r.value > 0


def test_p0_slice_norm_is_grid_sup():
    # a p = 0 element is multiplication by its (grid-sampled) function
    e = random_element(P, G, 8, support=0)
    assert op_norm(e) == pytest.approx(e.sup(), rel=1e-12)


@pytest.mark.parametrize("p", [-3, 1, 4])
def test_single_slice_norm_is_sup(p):
    e = random_element(P, G, 9)
    s = single_slice(P, G, p, e.slice(p))
    assert op_norm(s) == pytest.approx(s.sup(), rel=1e-9)


@settings(max_examples=8, deadline=None)
@given(seeds, seeds)
def test_norm_inequalities(s1, s2):
    a = random_element(P, G, s1, support=2)
    b = random_element(P, G, s2, support=2)
    na, nb = op_norm(a), op_norm(b)
    assert op_norm(a + b) <= na + nb + 1e-9
    assert op_norm(star(a, b)) <= na * nb + 1e-9
    assert op_norm(adjoint(a)) == pytest.approx(na, rel=1e-9)
    assert op_norm(star(adjoint(a), a)) == pytest.approx(na * na, rel=1e-6)


def test_stack_norms():
    a = random_element(P, G, 10)
    zero = 0 * a
    col = stack_norm_report([a, zero], "col").value
    row = stack_norm_report([a, zero], "row").value
    assert col == pytest.approx(op_norm(a), rel=1e-9)
    assert row == pytest.approx(op_norm(a), rel=1e-9)
    # [a; a] has norm sqrt(2) |a|
    assert stack_norm_report([a, a], "col").value == pytest.approx(math.sqrt(2) * op_norm(a), rel=1e-9)
    with pytest.raises(ValueError):
        stack_norm_report([a], "diag")
    with pytest.raises(ValueError):
        stack_norm_report([])


def test_positive_element_spectrum():
    a = random_element(P, G, 11, support=2)
    assert fibre_spectrum_min(star(adjoint(a), a)) >= -1e-10
    assert fibre_spectrum_min(-1 * identity_element(P, G)) == pytest.approx(-1.0)


def test_operands_must_match():
    a = random_element(P, G, 0)
    b = random_element(ManifoldParams(hbar=0.5), G, 0)
    with pytest.raises(ValueError):
        star(a, b)
    with pytest.raises(ValueError):
        apply(a, random_state(ManifoldParams(hbar=0.5), G, 0))


def test_classical_star_commutes():
    prm = ManifoldParams(hbar=0.0)
    a = random_element(prm, G, 1, support=2)
    b = random_element(prm, G, 2, support=2)
    assert rel(star(a, b).values, star(b, a).values) < 1e-12
