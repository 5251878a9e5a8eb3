from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhm.action import gamma
from qhm.algebra import identity_element, op_norm, star
from qhm.core import Grid, ManifoldParams, random_element, single_slice
from qhm.metric import (
    CotangentPair,
    default_t_grid,
    delta1,
    delta2,
    dmap,
    holder_seminorm,
    lip_norm,
    module_norms,
    theorem19_check,
)

P, G = ManifoldParams(), Grid()


def rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def plane_wave(kx, ky):
    X, Y = np.meshgrid(G.x, G.y, indexing="ij")
    return single_slice(P, G, 0, np.exp(1j * kx * X + 2j * math.pi * ky * Y))


def test_derivations_of_plane_wave():
    e = plane_wave(2, -1)
    assert np.allclose(delta1(e).values, -2j * e.values, atol=1e-12)
    assert np.allclose(delta2(e).values, 2j * math.pi * e.values, atol=1e-11)


def test_derivations_kill_identity():
    one = identity_element(P, G)
    assert np.max(np.abs(delta1(one).values)) < 1e-13
    assert np.max(np.abs(delta2(one).values)) < 1e-13


def test_commutator_of_derivations():
    # [delta1, delta2] Phi = -i c p Phi
    e = random_element(P, G, 1)
    lhs = delta1(delta2(e)) - delta2(delta1(e))
    rhs = e.values * (-1j * P.c * G.p[:, None, None])
    # second spectral derivatives of the |p| >= 3 slices alias at the 1e-8 level
    assert rel(lhs.values, rhs) < 1e-7


def test_derivations_commute_with_gamma():
    e = random_element(P, G, 2)
    for d in (delta1, delta2):
        assert rel(d(gamma(e, 0.6)).values, gamma(d(e), 0.6).values) < 1e-12


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 5000))
def test_leibniz(s1, s2):
    a = random_element(P, G, s1, support=2)
    b = random_element(P, G, s2, support=2)
    ab = star(a, b)
    for d in (delta1, delta2):
        assert rel(d(ab).values, (star(a, d(b)) + star(d(a), b)).values) < 1e-7


def test_module_norms():
    one = identity_element(P, G)
    assert module_norms(CotangentPair(one, 0 * one)) == pytest.approx((1.0, 1.0), abs=1e-12)
    e = random_element(P, G, 3)
    left, right = module_norms(dmap(e))
    assert left > 0 and right > 0
    # each component is dominated by the stacked norm
    assert max(op_norm(delta1(e)), op_norm(delta2(e))) <= min(left, right) + 1e-9


def test_module_norms_agree_classically():
    prm = ManifoldParams(hbar=0.0)
    e = random_element(prm, G, 4)
    left, right = module_norms(dmap(e))
    assert left == pytest.approx(right, rel=1e-9)


def test_cotangent_pair_requires_match():
    with pytest.raises(ValueError):
        CotangentPair(random_element(P, G, 0), random_element(ManifoldParams(hbar=0.5), G, 0))


def test_lip_norm():
    one = identity_element(P, G)
    assert lip_norm(one) == pytest.approx(1.0)
    e = random_element(P, G, 5)
    assert lip_norm(e) >= op_norm(e)
    assert lip_norm(3 * e) == pytest.approx(3 * lip_norm(e), rel=1e-9)


def test_default_t_grid():
    ts = default_t_grid()
    assert len(ts) == 24
    assert ts[0] == pytest.approx(1e-3) and ts[-1] == pytest.approx(4.0)
    assert np.allclose(np.diff(np.log(ts)), math.log(4e3) / 23)


def test_holder_quotients_single_slice():
    # |e - gamma_t e| = |1 - e^{ipt}| |e| exactly for a single slice
    e = random_element(P, G, 6)
    s = single_slice(P, G, 3, e.slice(3))
    ts = [0.01, 0.1, 1.0]
    rep = holder_seminorm(s, 1, 1, 0.5, ts)
    n = op_norm(s)
    want = [abs(1 - np.exp(3j * t)) * n / math.sqrt(t) for t in ts]
    assert rep.quotients["gamma"] == pytest.approx(want, rel=1e-9)
    assert rep.value == max(max(v) for v in rep.quotients.values())
    d = rep.to_dict()
    assert set(d) == {"name", "value", "samples", "argmax", "flow"}


def test_holder_alpha_quotient_plane_wave():
    e = plane_wave(2, 0)
    r = 4 * G.dx
    rep = holder_seminorm(e, 1, 1, 1, [r])
    assert rep.quotients["alpha"][0] == pytest.approx(abs(np.exp(-2j * r) - 1) / r, rel=1e-12)


@pytest.mark.parametrize("bad", [{"A": 0}, {"B": 1.5}, {"C": -0.1}])
def test_holder_exponent_validation(bad):
    with pytest.raises(ValueError):
        holder_seminorm(random_element(P, G, 0), **bad)


def test_holder_t_grid_validation():
    e = random_element(P, G, 0)
    with pytest.raises(ValueError):
        holder_seminorm(e, t_grid=[])
    with pytest.raises(ValueError):
        holder_seminorm(e, t_grid=[0.1, -1.0])


def test_theorem19_report():
    for s in (7, 8):
        rep = theorem19_check(random_element(P, G, s), default_t_grid(8))
        assert rep.passed()
        assert rep.lip_norm == pytest.approx(1.0)
        assert set(rep.to_dict()) == {"gamma_margin", "lip_margin", "lip_norm", "holder", "norm"}
    with pytest.raises(ValueError):
        theorem19_check(0 * random_element(P, G, 0))
