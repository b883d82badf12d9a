from math import comb
from random import Random

import pytest
from hypothesis import given, settings, strategies as st

from mfsheaf import catalog as cat
from mfsheaf.algebra import P3
from mfsheaf.cohomology import cohomology, rank
from mfsheaf.errors import PreconditionViolated
from mfsheaf.homalg import (
    ChainMap,
    check_chain_map,
    classify_image,
    decompose,
    end_algebra,
    ext1_oh_point_ideal,
    ext1_X,
    ext_p3,
    hom_basis,
    hom_dim,
    is_isomorphic,
    kernel_of_w,
    NonSplitReport,
    restrict_to_H,
)
from mfsheaf.presentation import GradedMatrix, direct_sum, extension_block, twist

x, y, z, w = P3.gens()


def test_hom_examples():
    assert hom_dim(cat.o_H(), cat.line_ideal()) == 1
    assert hom_dim(cat.line_ideal(), cat.o_H()) == 1
    assert hom_dim(cat.nonlayered_ulrich(), cat.o_X(1)) == 3


@pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (-1, 1), (0, 2)])
def test_hom_line_bundles_on_h(a, b):
    assert hom_dim(cat.o_H(a), cat.o_H(b)) == comb(b - a + 2, 2)


def test_basis_elements_are_chain_maps():
    pairs = [(cat.line_ideal(), cat.tower(3)), (cat.tower(3), cat.tower(3)), (cat.o_H(), cat.o_X(1))]
    for e, f in pairs:
        for u in hom_basis(e, f).basis:
            assert check_chain_map(u, e, f)
            lhs = u.beta * e.M
            rhs = f.M * u.alpha
            assert lhs == rhs


@settings(max_examples=6, deadline=None)
@given(st.integers(-2, 2))
def test_hom_twist_equivariant(t):
    e, f = cat.line_ideal(), cat.tower(3)
    assert hom_dim(twist(e, t), twist(f, t)) == hom_dim(e, f)
    assert ext1_X(twist(e, t), twist(f, t)).dim == ext1_X(e, f).dim


def test_ext1_examples():
    assert ext1_X(cat.o_H(), cat.o_H()).dim == 3
    assert all(ext1_X(cat.o_X(), cat.o_H(a)).dim == 0 for a in range(-4, 5))
    assert ext1_oh_point_ideal(cat.o_H(), cat.o_X(), (0, 0, 1, 0)) == 1


def test_ext_p3_examples():
    target = cat.o_Xnm(2, 2)
    assert [ext_p3(1, cat.o_H(a), target) for a in (0, -1, 1)] == [3, 6, 1]
    for (a, d), want in {(0, 1): 2, (0, 2): 1, (1, 1): 0}.items():
        ic = cat.ideal_curve(cat.random_plane_form(d, 5))
        assert ext_p3(1, cat.o_H(a), ic) == want
    with pytest.raises(PreconditionViolated):
        ext_p3(1, cat.o_H(), cat.rule_point_ideal())


def test_ext0_matches_hom():
    rng = Random(3)
    names = ["o_H", "o_X", "line_ideal", "tower", "nonlayered_ulrich", "ideal_curve"]
    for _ in range(10):
        e = cat.build(rng.choice(names))
        f = twist(cat.build(rng.choice(names)), rng.randint(0, 1))
        assert ext_p3(0, e, f) == hom_dim(e, f)


def test_end_examples():
    assert end_algebra(cat.o_H()).dim == 1
    for d, want in ((2, 4), (3, 7)):
        alg = end_algebra(cat.ideal_curve(cat.random_plane_form(d, 11)))
        assert alg.dim == want and alg.verdict == "indecomposable"


def test_end_algebra_structure():
    alg = end_algebra(direct_sum(cat.o_H(), cat.line_ideal()))
    basis = range(alg.dim)
    unit = alg.unit
    for a in basis:
        ea = [1 if i == a else 0 for i in basis]
        assert alg.multiply(unit, ea) == ea == alg.multiply(ea, unit)
        for b in basis:
            eb = [1 if i == b else 0 for i in basis]
            for c in basis:
                ec = [1 if i == c else 0 for i in basis]
                assert alg.multiply(alg.multiply(ea, eb), ec) == alg.multiply(ea, alg.multiply(eb, ec))
    assert alg.verdict == "decomposable"


def test_decompose_examples():
    parts = decompose(direct_sum(cat.o_H(), cat.o_X(1)))
    assert sorted(rank(p) for p in parts) == [0.5, 1]
    zero = GradedMatrix(cat.double_plane(), cat.o_H(-2).M.source_degrees, cat.o_H(-1).M.target_degrees, [[P3.zero(2)]])
    assert len(decompose(extension_block(cat.o_H(-1), cat.o_H(-2), zero))) == 2
    assert len(decompose(cat.tower(3))) == 1


def test_decompose_hilbert_additivity():
    e = direct_sum(direct_sum(cat.o_H(), cat.line_ideal()), cat.o_X(1))
    parts = decompose(e)
    assert len(parts) == 3
    for t in range(-2, 4):
        assert sum(cohomology(p, 0, t) for p in parts) == cohomology(e, 0, t)
    assert all(len(decompose(p)) == 1 for p in parts)


def test_iso_examples():
    c1 = cat.ideal_curve(cat.random_plane_form(2, 1))
    c2 = cat.ideal_curve(cat.random_plane_form(2, 2))
    assert not is_isomorphic(c1, c2)
    assert not is_isomorphic(cat.o_H(), cat.o_H(1))
    assert is_isomorphic(c1, c1)
    t2 = cat.tower(2)
    line = cat.line_ideal(ell=t2.M.entries[0][1])
    assert is_isomorphic(t2, line) and is_isomorphic(line, t2)


def test_iso_point_construction():
    """The point construction does not depend on the point."""
    assert is_isomorphic(cat.nonlayered_ulrich((0, 0, 1, 0)), cat.nonlayered_ulrich((1, 0, 0, 0)))


def test_classify_image_examples():
    ox1 = cat.o_X(1)
    amb = cat.double_plane()
    one = P3.const(1)
    ident = ChainMap(
        GradedMatrix(amb, [1], [1], [[one]]), GradedMatrix(amb, [-1], [-1], [[one]])
    )
    assert classify_image(ident, ox1).case == "a"
    lin = ChainMap(GradedMatrix(amb, [0], [1], [[x]]), GradedMatrix(amb, [-2], [-1], [[x]]))
    assert classify_image(lin, cat.o_X(1)).case == "f"
    ep = cat.nonlayered_ulrich()
    cases = {classify_image(u, ox1).case for u in hom_basis(ep, ox1).basis}
    assert "e" in cases or "c" in cases


def test_kernel_of_w_examples():
    assert kernel_of_w(cat.o_X()) == [-1]
    assert kernel_of_w(cat.o_H()) == [0]
    assert kernel_of_w(cat.ideal_curve(cat.random_plane_form(2, 4))) == [-1]
    rep = kernel_of_w(cat.spinor_restriction())
    assert isinstance(rep, NonSplitReport)
    # O_H(-1) + O_H(-2) + Omega^1_H, with h^0(Omega^1(t)) = (t-1)(t+1) for t >= 1
    for t, v in rep.hilbert_function.items():
        expect = (t + 1) * t // 2 + t * (t - 1) // 2 + max((t - 1) * (t + 1), 0) if t >= 1 else 0
        assert v == expect


def test_restrict_examples():
    r = restrict_to_H(cat.o_X(), range(-2, 5))
    assert all(v == max((t + 2) * (t + 1) // 2, 0) for t, v in r.hilbert_function.items())
    # module and sheaf agree from t = 2 on; O_H + O_H(-1) + Omega^1_H(1)
    r = restrict_to_H(cat.spinor_restriction(), range(2, 7))
    for t, v in r.hilbert_function.items():
        assert v == (t + 2) * (t + 1) // 2 + (t + 1) * t // 2 + t * (t + 2)


def test_restrict_line_ideal():
    """I_L(1)|_H has P(t) = P_{O_H(1)}(t) + (t + 1)."""
    r = restrict_to_H(cat.line_ideal(), range(0, 6))
    assert all(v == (t + 3) * (t + 2) // 2 + (t + 1) for t, v in r.hilbert_function.items())
