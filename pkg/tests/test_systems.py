"""Auxiliary-field constructions over the exact calculus.

The suite runner is exercised per system; separately, the governing operators
are pinned against formulas assembled from raw calculus primitives, so a wiring
mistake inside a builder cannot hide behind the structural identities.
"""

import random

import pytest
from gmpy2 import mpq

from proca_workbench.exact_checks import (SYSTEM_TAGS, check_identity_suite,
                                          check_structure_suite, rand_form)
from proca_workbench.symforms import (GaugeBackground, codiff, ext_d,
                                      interior, kg_op, wedge)
from proca_workbench.systems import (SymCalculus, charged_system,
                                     multiplet_system, neutral_alt_system,
                                     neutral_system, vector_scalar_system)


@pytest.mark.parametrize("tag", SYSTEM_TAGS)
def test_structure_suite_passes(tag):
    rep = check_structure_suite(tag, seed=1, trials=6)
    assert rep.all_passed, rep.to_json()
    assert len(rep.results) == 6          # six defining relations per system


def test_identity_suite_passes():
    rep = check_identity_suite(seed=1, trials=6)
    assert rep.all_passed, rep.to_json()
    blob = rep.to_jsonable()
    assert blob["suite"] and blob["results"]
    assert all(not r["failures"] for r in blob["results"])


def test_unknown_system_tag_rejected():
    with pytest.raises(ValueError):
        check_structure_suite("tachyonic", trials=1)


# --- governing operators against raw-calculus formulas ----------------------

def test_neutral_field_operator_formula():
    rng = random.Random(2)
    calc = SymCalculus()
    m2 = mpq(5, 3)
    sys_ = neutral_system(calc, m2)
    for _ in range(3):
        W = rand_form(rng, 1)
        got = sys_.field_op((W,))[0]
        want = -codiff(ext_d(W)) + W.scale(m2)
        assert (got - want).is_zero()


def test_neutral_alt_reduction_at_higher_degree():
    rng = random.Random(3)
    calc = SymCalculus()
    m2 = mpq(7, 2)
    sys_ = neutral_alt_system(calc, m2, p=2)
    for _ in range(3):
        W = rand_form(rng, 2)
        u = sys_.prolong((W,))
        assert sys_.project(u) == (W,)
        red = sys_.project(sys_.extended_op(u))
        want = sys_.field_op((W,))
        assert (red[0] - want[0]).is_zero()
        # and the derivative slot actually carries dW
        assert (u[1] - ext_d(W)).is_zero()


def test_multiplet_with_constant_diagonal_mass_reduces_to_neutral():
    rng = random.Random(4)
    calc = SymCalculus()
    m2 = mpq(3, 4)
    from proca_workbench.symforms import scalar_form
    from proca_workbench.exactpoly import Poly
    const = scalar_form(Poly.const(m2))
    zero = scalar_form(Poly())
    rho = ((const, zero), (zero, const))
    sys_m = multiplet_system(calc, rho, 2)
    sys_n = neutral_system(calc, m2)
    for _ in range(3):
        W1 = rand_form(rng, 1)
        W2 = rand_form(rng, 1)
        got = sys_m.field_op(((W1, W2),))[0]
        assert (got[0] - sys_n.field_op((W1,))[0]).is_zero()
        assert (got[1] - sys_n.field_op((W2,))[0]).is_zero()


def test_charged_field_operator_matches_background_route():
    rng = random.Random(5)
    calc = SymCalculus()
    m2 = mpq(2)
    for kappa in (mpq(0), mpq(1), mpq(7, 5)):
        q = mpq(3, 7)
        A = rand_form(rng, 1, max_degree=2, real_only=True)
        gauge = calc.bind_background(q, A)
        sys_ = charged_system(calc, gauge, m2, kappa)
        bg = GaugeBackground(q, A)
        W = rand_form(rng, 1)
        got = sys_.field_op((W,))[0]
        want = bg.field_op(W, m2, kappa)
        assert (got - want).is_zero()


def test_charged_zero_charge_reduces_to_neutral():
    rng = random.Random(6)
    calc = SymCalculus()
    m2 = mpq(9, 4)
    A = rand_form(rng, 1, max_degree=2, real_only=True)
    gauge = calc.bind_background(mpq(0), A)
    sys_c = charged_system(calc, gauge, m2, mpq(13, 6))
    sys_n = neutral_system(calc, m2)
    W = rand_form(rng, 1)
    assert (sys_c.field_op((W,))[0] - sys_n.field_op((W,))[0]).is_zero()


def test_vector_scalar_field_operator_formula():
    rng = random.Random(7)
    calc = SymCalculus()
    m2, mu2 = mpq(3), mpq(5, 2)
    v = rand_form(rng, 1, max_degree=2, real_only=True)
    sys_ = vector_scalar_system(calc, m2, mu2, v)
    for _ in range(3):
        W = rand_form(rng, 1)
        phi = rand_form(rng, 0)
        top, bottom = sys_.field_op((W, phi))
        want_top = -codiff(ext_d(W)) + W.scale(m2) + wedge(v, phi)
        want_bottom = kg_op(phi, mu2) - interior(v, W)
        assert (top - want_top).is_zero()
        assert (bottom - want_bottom).is_zero()


def test_vector_scalar_coupling_is_off_diagonal():
    # with v = 0 the two fields decouple into their free operators
    rng = random.Random(8)
    calc = SymCalculus()
    from proca_workbench.symforms import zero_form
    sys_ = vector_scalar_system(calc, mpq(3), mpq(5, 2), zero_form(1))
    W = rand_form(rng, 1)
    phi = rand_form(rng, 0)
    top, bottom = sys_.field_op((W, phi))
    assert (top - (-codiff(ext_d(W)) + W.scale(mpq(3)))).is_zero()
    assert (bottom - kg_op(phi, mpq(5, 2))).is_zero()
