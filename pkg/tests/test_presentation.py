import pytest
from hypothesis import given, settings, strategies as st

from mfsheaf import catalog as cat
from mfsheaf.algebra import P3, det_poly
from mfsheaf.cohomology import cohomology, rank
from mfsheaf.errors import DegreeMismatch, NotAnnihilated, ParseError, SubstitutionNotCompatible
from mfsheaf.presentation import (
    GradedMatrix,
    complete_factorization,
    direct_sum,
    dumps,
    extension_block,
    io_roundtrip,
    loads,
    minimalize,
    substitute,
    twist,
)

x, y, z, w = P3.gens()
X = cat.double_plane()
O = P3.zero


def gm(src, tgt, rows):
    return GradedMatrix(X, src, tgt, rows)


def test_degree_validation():
    with pytest.raises(DegreeMismatch):
        gm([-1], [0], [[x * x]])


def test_complete_factorization_examples():
    assert complete_factorization(gm([-1], [0], [[w]]), w * w).N.entries == ((w,),)
    g = x * x + y * z
    mf = complete_factorization(gm([-1, -2], [0, -1], [[w, g], [O(1), w]]), w * w)
    assert mf.N.entries == ((w, -g), (O(1), w))
    m = gm([-1, -1, -1], [0, 0, 0], [[w, x, y], [O(1), w, x], [O(1), O(1), w]])
    with pytest.raises(NotAnnihilated):
        complete_factorization(m, w * w)


def test_twist_examples():
    oh = cat.o_H()
    assert cohomology(twist(oh, 3), 0, 0) == 10
    ic = cat.ideal_curve(cat.random_plane_form(2, 3))
    assert twist(twist(ic, 4), -4).M == ic.M


@settings(max_examples=10, deadline=None)
@given(st.integers(-4, 4), st.integers(-3, 3))
def test_twist_shifts_h0(a, t):
    e = cat.line_ideal()
    assert cohomology(twist(e, a), 0, t) == cohomology(e, 0, t + a)


def test_direct_sum_examples():
    oh, ox = cat.o_H(), cat.o_X()
    assert cohomology(direct_sum(oh, oh), 0, 0) == 2
    s = direct_sum(oh, ox)
    assert rank(s) == pytest.approx(1.5)
    assert det_poly(s.M) == det_poly(oh.M) * det_poly(ox.M)


def test_substitute_examples():
    ic = cat.ideal_curve(cat.random_plane_form(2, 3))
    same = substitute(ic.mf, {v: P3.var(v) for v in P3.variables}, X)
    assert same == ic.mf
    big = cat.clifford_factorization()
    q = big.f
    images = dict(zip(big.M.ring.variables, [w, x, y, z, O(1), O(1), O(1)]))
    assert q.substitute([images[v] for v in big.M.ring.variables], P3) == w * w
    s = substitute(big, images, X)
    assert s.M.nrows == 8 and s.M * s.N == s.M.scaled_identity(w * w, s.M.target_degrees, 2)
    with pytest.raises(SubstitutionNotCompatible):
        substitute(big, dict(images, x4=x), X)


def test_extension_block_examples():
    oh = cat.o_H()
    ohm = cat.o_H(-1)
    lift = gm(oh.M.source_degrees, ohm.M.target_degrees, [[P3.const(1)]])
    e = extension_block(ohm, oh, lift)
    m = minimalize(e.M)
    assert m.nrows == 1 and m.entries[0][0] in (w * w, -(w * w))
    g = cat.random_plane_form(2, 9)
    ohd = cat.o_H(-2)
    lift = gm(ohd.M.source_degrees, ohm.M.target_degrees, [[g]])
    assert extension_block(ohm, ohd, lift).M == cat.ideal_curve(g).M
    zero = gm(ohd.M.source_degrees, ohm.M.target_degrees, [[O(2)]])
    assert extension_block(ohm, ohd, zero).M == direct_sum(ohm, ohd).M


def test_minimalize_examples():
    m = minimalize(gm([-1, 0], [0, 1], [[w, P3.const(1)], [O(2), w]]))
    assert m.nrows == 1 and m.entries[0][0].degree == 2
    g = cat.random_plane_form(3, 2)
    ic = cat.ideal_curve(g)
    assert minimalize(ic.M) == ic.M
    padded = gm([-2, -4, 0], [-1, -3, 0], [[w, g, O(-1)], [O(1), w, O(-3)], [O(2), O(4), P3.const(1)]])
    assert minimalize(padded) == ic.M


def test_roundtrip():
    ic = cat.ideal_curve(cat.random_plane_form(2, 7))
    assert dumps(io_roundtrip(ic)) == dumps(ic)
    s = cat.spinor_restriction()
    back = io_roundtrip(s)
    assert back.M == s.M and back.mf.N == s.mf.N
    with pytest.raises(ParseError):
        loads('{"field": "Q", "variables": ["x","y","z","w"], "hypersurface": "w^2",'
              ' "source_degrees": [-1], "target_degrees": [0], "matrix": [["w +"]]}')
    with pytest.raises(ParseError):
        loads("{not json")


def test_plane_ambient_allows_null_hypersurface():
    e = cat.rule_Epa(a=1)
    assert e.mf is None and e.ambient.f is None
    assert loads(dumps(e)).M == e.M
