from math import comb
from random import Random

import pytest
from hypothesis import given, settings, strategies as st

from mfsheaf.algebra import (
    GF,
    P3,
    QQ,
    Form,
    PieceMatrix,
    Ring,
    det_poly,
    exact_linear_algebra,
    format_form,
    monomial_basis,
    parse_form,
    random_form,
    scalar_det,
)
from mfsheaf.catalog import clifford_factorization, double_plane, ideal_curve, random_plane_form
from mfsheaf.errors import ParseError
from mfsheaf.presentation import GradedMatrix

x, y, z, w = P3.gens()


def test_monomial_basis_counts():
    assert len(monomial_basis(4, 2)) == 10
    assert monomial_basis(3, 0) == [(0, 0, 0)]
    assert monomial_basis(4, -1) == []


@given(st.integers(1, 5), st.integers(0, 6))
def test_monomial_basis_size(n, d):
    basis = monomial_basis(n, d)
    assert len(basis) == comb(d + n - 1, n - 1)
    assert len(set(basis)) == len(basis)
    assert basis == monomial_basis(n, d)


def test_piece_of_w():
    amb = double_plane()
    m = GradedMatrix(amb, [-1], [0], [[w]])
    assert m.piece(0).ncols == 0 and m.piece(0).cokernel_dim() == 1
    # S_1 -> S_2: the source piece of O(-1) is S_{t-1}
    p = m.piece(2)
    assert (p.nrows, p.ncols, p.rank()) == (10, 4, 4)


def test_zero_and_diagonal_pieces():
    amb = double_plane()
    zero = GradedMatrix(amb, [0, 0], [0, 0], [[P3.zero(0)] * 2] * 2)
    assert zero.piece(2).rank() == 0
    diag = GradedMatrix(amb, [-1, -1], [0, 0], [[w, P3.zero(1)], [P3.zero(1), w]])
    assert diag.piece(2).rank() == 8


def test_linear_algebra_examples():
    eye = PieceMatrix.from_dense(QQ, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    s = exact_linear_algebra(eye)
    assert (s.rank, s.cokernel_dim, len(s.kernel)) == (3, 0, 0)
    zero = PieceMatrix.from_dense(QQ, [[0] * 5] * 2)
    s = exact_linear_algebra(zero)
    assert (s.rank, len(s.kernel)) == (0, 5)


@settings(max_examples=40)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10**6), st.sampled_from([None, 101, 7]))
def test_rank_nullity(r, c, seed, p):
    fld = QQ if p is None else GF(p)
    rng = Random(seed)
    rows = [[fld(rng.randint(-2, 2)) for _ in range(c)] for _ in range(r)]
    a = PieceMatrix.from_dense(fld, rows)
    assert a.rank() + len(a.kernel()) == c
    for v in a.kernel():
        assert not a.apply(v)


def test_det_examples():
    assert det_poly([[w]]) == w
    g = random_plane_form(3, 1)
    assert det_poly(ideal_curve(g).M) == w * w
    mf = clifford_factorization()
    q = mf.f
    assert det_poly(mf.M) == q**4


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10**6))
def test_det_schwartz_zippel(n, seed):
    ring = Ring(("x", "y", "z", "w"), GF(101))
    rng = Random(seed)
    rows = [[random_form(ring, 1, rng) for _ in range(n)] for _ in range(n)]
    pt = [ring.field.random(rng) for _ in range(4)]
    assert det_poly(rows).evaluate(pt) == scalar_det([[e.evaluate(pt) for e in r] for r in rows], ring.field)


def test_grammar():
    f = parse_form(P3, "3*x^2*w - x*y*z")
    assert f == (x * x * w).scale(3) - x * y * z
    assert format_form(f) == "3*x^2*w - x*y*z"
    with pytest.raises(ParseError):
        parse_form(P3, "3*x^2*w - y*z")  # mixed degrees
    with pytest.raises(ParseError) as err:
        parse_form(P3, "x + * y")
    assert err.value.column >= 1
    with pytest.raises(ParseError):
        parse_form(P3, "x + q")


@settings(max_examples=50)
@given(st.integers(0, 4), st.integers(0, 10**6))
def test_format_parse_roundtrip(d, seed):
    f = random_form(P3, d, Random(seed))
    assert parse_form(P3, format_form(f), d) == f


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_ring_axioms(seed):
    rng = Random(seed)
    a, b, c = (random_form(P3, 1, rng) for _ in range(3))
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert (a * b).exact_div(b) == a if not b.is_zero() else True


def test_field_coercion():
    f = GF(7)
    assert f(10) == 3 and f.inv(3) * 3 % 7 == 1
    assert QQ.to_json() == "Q" and GF(7).to_json() == {"Fp": 7}
    assert Form.from_terms(P3, 0, {(0, 0, 0, 0): 1}).is_unit()
