import pytest

from mfsheaf import catalog as cat
from mfsheaf.algebra import P3
from mfsheaf.cohomology import cohomology, hilbert_polynomial, is_acm, is_initialized, is_ulrich, rank
from mfsheaf.errors import ValidationFailed
from mfsheaf.homalg import decompose, end_algebra, hom_dim, is_isomorphic
from mfsheaf.presentation import complete_factorization

x, y, z, w = P3.gens()


@pytest.mark.parametrize("name", cat.catalog_names())
def test_entry_matches_documentation(name):
    entry = cat.CATALOG[name]
    e = entry.build()
    if e.mf is not None:
        complete_factorization(e.M, e.mf.f)
    if entry.rank is not None:
        assert rank(e) == entry.rank
    if entry.hilbert is not None:
        p = hilbert_polynomial(e)
        assert all(p(t) == entry.hilbert(t) for t in range(-3, 7))
    if entry.acm_init_ulrich is not None:
        assert (is_acm(e), is_initialized(e), is_ulrich(e)) == entry.acm_init_ulrich


def test_tower_two_is_line_ideal():
    t2 = cat.build("tower", length=2)
    assert is_isomorphic(t2, cat.line_ideal(ell=t2.M.entries[0][1]))


def test_point_construction():
    e = cat.build("nonlayered_ulrich", point=(0, 0, 1, 0))
    assert rank(e) == 1.5 and cohomology(e, 0, 0) == 3
    assert (e.M.nrows, e.M.ncols) == (3, 3)


def test_spinor_shape():
    s = cat.spinor_restriction()
    assert s.M.nrows == 8 and all(x.degree == 1 for row in s.M.entries for x in row)
    assert s.M * s.mf.N == s.M.scaled_identity(w * w, s.M.target_degrees, 2)
    assert rank(s) == 4


def test_family_indecomposable_and_split():
    e = cat.family_sheaf(2, 0, 2, seed=3)
    assert end_algebra(e).verdict == "indecomposable"
    assert len(decompose(cat.family_sheaf(2, 0, 2, lam=[P3.zero(3)] * 3))) == 4


@pytest.mark.parametrize("length", range(2, 7))
def test_tower_hom_from_oh(length):
    assert hom_dim(cat.o_H(), cat.tower(length)) == 1


def test_validation():
    with pytest.raises(ValidationFailed):
        cat.family_sheaf(0, 1, 2)
    with pytest.raises(ValidationFailed):
        cat.ideal_curve(x * w)
    with pytest.raises(ValidationFailed):
        cat.tower(0)
    with pytest.raises(ValidationFailed):
        cat.build("nope")
    with pytest.raises(ValidationFailed):
        cat.nonlayered_ulrich((0, 0, 1, 1))


def test_rule_point_ideal_examples():
    ip = cat.rule_point_ideal()
    assert cohomology(ip, 1, -1) == 1 and cohomology(ip, 0, 1) == 3
