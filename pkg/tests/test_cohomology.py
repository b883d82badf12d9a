from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mfsheaf import catalog as cat
from mfsheaf.cohomology import (
    cohomology,
    hilbert,
    hilbert_polynomial,
    ind,
    is_acm,
    is_initialized,
    is_ulrich,
    is_x_sheaf,
    predicates,
    rank,
    regularity_scan,
    rules_cohomology,
    window,
)
from mfsheaf.errors import UnknownRule
from mfsheaf.homalg import hom_dim
from mfsheaf.presentation import twist


def test_h0_examples():
    assert cohomology(cat.o_H(), 0, 1) == 3
    ep = cat.nonlayered_ulrich()
    assert cohomology(ep, 0, 0) == 3 and cohomology(ep, 0, -1) == 0
    s = cat.spinor_restriction()
    assert cohomology(s, 0, 1) == 8 and cohomology(s, 0, 0) == 0


def test_serre_cross_check():
    assert cohomology(cat.o_X(), 2, -3) == 4
    assert hom_dim(cat.o_X(-3), cat.o_X(-2)) == 4


def test_no_intermediate_cohomology_on_x():
    for e in (cat.o_X(), cat.line_ideal(), cat.tower(3)):
        assert all(cohomology(e, 1, t) == 0 for t in range(-5, 5))


def test_hilbert_examples():
    p = hilbert_polynomial(cat.o_X())
    assert all(p(t) == (t + 1) ** 2 for t in range(-5, 6))
    assert rank(cat.o_H()) == Fraction(1, 2)
    assert rank(cat.spinor_restriction()) == 4
    data = hilbert(cat.tower(2))
    assert data.rank == 1 and data.multiplicity == 2 and data.support_dim == 2


@settings(max_examples=10, deadline=None)
@given(st.integers(-3, 3))
def test_chi_matches_polynomial(t):
    for e in (cat.o_H(), cat.o_X(2), cat.ideal_curve(cat.random_plane_form(3, 1)), cat.rule_point_ideal()):
        chi = sum((-1) ** i * cohomology(e, i, t) for i in range(4))
        assert chi == hilbert_polynomial(e)(t)


def test_regularity_examples():
    assert regularity_scan(cat.o_X()).minimally_regular_twist == 1
    assert regularity_scan(twist(cat.o_X(), 1)).minimally_regular_twist == 0
    assert regularity_scan(cat.o_H()).minimally_regular_twist == 0
    for k in (2, 3, 4):
        assert ind(cat.tower(k)) == 0


def test_predicate_examples():
    assert is_ulrich(cat.o_H())
    assert not is_ulrich(cat.o_X())
    assert is_ulrich(cat.nonlayered_ulrich())
    assert not is_acm(cat.rule_point_ideal())
    assert is_initialized(cat.line_ideal())
    assert is_x_sheaf(cat.o_H(), 1) and not is_x_sheaf(cat.o_X(), 1)
    assert predicates(cat.tower(3)) == predicates(cat.tower(3))


def test_rules():
    assert rules_cohomology("point_ideal", 1, -1) == 1
    assert rules_cohomology("point_ideal", 0, 1) == 3
    assert [rules_cohomology("point", i, 4) for i in range(4)] == [1, 0, 0, 0]
    with pytest.raises(UnknownRule):
        rules_cohomology("nope", 0, 0)


def test_epa_cohomology():
    # a > 0: h^2(E(t)) vanishes exactly from t = -3 on, h^1(E(-2)) = 1
    for a in (1, 2):
        e = cat.rule_Epa(a=a)
        assert cohomology(e, 2, -3) == 0 < cohomology(e, 2, -4)
        assert cohomology(e, 1, -2) == 1


def test_lemma_erra14_h1():
    """h^1(E_{p,a}(-1)) > 0 for a > 0, as stated for the bundle."""
    assert all(cohomology(cat.rule_Epa(a=a), 1, -1) > 0 for a in (1, 2, 3))


def test_window_override(monkeypatch):
    monkeypatch.setenv("MFSHEAF_WINDOW", "-2:3")
    assert list(window(cat.o_H())) == [-2, -1, 0, 1, 2, 3]
