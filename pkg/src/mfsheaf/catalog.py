"""Named constructions of the sheaves studied on the double plane X = {w² = 0}."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from random import Random
from typing import Any, Callable, Sequence

from .algebra import QQ, Field, Form, Ring, kernel_of_rows, random_form, rank_of
from .cohomology import binom_poly
from .errors import ValidationFailed
from .presentation import (
    Ambient,
    GradedMatrix,
    MatrixFactorization,
    SheafHandle,
    extension_block,
    mf_handle,
    minimalize,
    sheaf_from_matrix,
    substitute,
)

VARS = ("x", "y", "z", "w")


def p3(field: Field = QQ) -> Ring:
    return Ring(VARS, field)


def double_plane(field: Field = QQ) -> Ambient:
    ring = p3(field)
    return Ambient(ring, ring.var("w") ** 2)


def plane(field: Field = QQ) -> Ambient:
    return Ambient(Ring(("x", "y", "z"), field), None)


def _one_by_one(amb: Ambient, entry: Form, target: int, name: str, prov: str) -> SheafHandle:
    m = GradedMatrix(amb, [target - entry.degree], [target], [[entry]])
    return sheaf_from_matrix(m, name, prov)


# ---------------------------------------------------------------- structure sheaves


def o_H(t: int = 0, field: Field = QQ) -> SheafHandle:
    amb = double_plane(field)
    return _one_by_one(amb, amb.ring.var("w"), t, _named("O_H", t), "O_H = coker(w)")


def o_X(t: int = 0, field: Field = QQ) -> SheafHandle:
    amb = double_plane(field)
    return _one_by_one(amb, amb.f, t, _named("O_X", t), "O_X = coker(w^2)")


def o_Xnm(n: int = 2, m: int = 2, t: int = 0, field: Field = QQ) -> SheafHandle:
    """Structure sheaf of X_n[m] = {w^m = 0} in P^{n+1}."""
    if n == 2:
        ring = p3(field)
    else:
        ring = Ring(tuple(f"x{i}" for i in range(1, n + 2)) + ("w",), field)
    f = ring.var("w") ** m
    return _one_by_one(Ambient(ring, f), f, t, _named(f"O_X{n}[{m}]", t), "coker(w^m)")


def _named(base: str, t: int) -> str:
    return base if t == 0 else f"{base}({t})"


# ---------------------------------------------------------------- rank-one sheaves


def ideal_curve(g: Form, t: int = 0) -> SheafHandle:
    """I_C(t) for the plane curve C = {g = w = 0}."""
    ring = g.ring
    if ring.variables != VARS:
        raise ValidationFailed("g must be written in x, y, z, w")
    if any(e[3] for e in g.terms):
        raise ValidationFailed("g must not involve w")
    d = g.degree
    if d < 1:
        raise ValidationFailed("curve degree must be positive")
    amb = double_plane(ring.field)
    w = ring.var("w")
    m = GradedMatrix(amb, [-2 + t, -d - 1 + t], [-1 + t, -d + t], [[w, g], [ring.zero(1), w]])
    return sheaf_from_matrix(m, _named(f"I_C[d={d}]", t), f"extension of O_H(-{d}) by O_H(-1), class {g}")


def random_plane_form(d: int, seed: int, field: Field = QQ) -> Form:
    ring = Ring(("x", "y", "z"), field)
    g = random_form(ring, d, Random(seed))
    return Form.from_terms(p3(field), d, {e + (0,): c for e, c in g.terms.items()})


def line_ideal(t: int = 0, ell: Form | None = None, field: Field = QQ) -> SheafHandle:
    """I_L(1 + t) for the line L = {ell = w = 0}."""
    ring = p3(field) if ell is None else ell.ring
    ell = ell if ell is not None else ring.var("x")
    amb = double_plane(ring.field)
    w = ring.var("w")
    m = GradedMatrix(amb, [t - 1, t - 1], [t, t], [[w, ell], [ring.zero(1), w]])
    return sheaf_from_matrix(m, _named("I_L(1)", t), f"line {ell} = w = 0")


# ---------------------------------------------------------------- layered towers


def general_class(sub: SheafHandle, quot: SheafHandle, rng: Random) -> GradedMatrix:
    """Random combination of a basis of Ext^1_X(quot, sub)."""
    from .homalg import ext1_X

    ext = ext1_X(quot, sub)
    if ext.dim == 0:
        raise ValidationFailed(f"Ext^1({quot.name}, {sub.name}) vanishes")
    fld = sub.ambient.field
    coeffs = [fld.random(rng) for _ in ext.cocycles]
    while not any(coeffs):
        coeffs = [fld.random(rng) for _ in ext.cocycles]
    base = ext.cocycles[0]
    rows = []
    for i in range(base.nrows):
        row = []
        for j in range(base.ncols):
            acc = base.ring.zero(base.target_degrees[i] - base.source_degrees[j])
            for c, z in zip(coeffs, ext.cocycles):
                acc = acc + z.entries[i][j].scale(c)
            row.append(acc)
        rows.append(row)
    return GradedMatrix(base.ambient, base.source_degrees, base.target_degrees, rows)


def tower(length: int, seed: int = 7, field: Field = QQ) -> SheafHandle:
    """E_length: iterated general extensions of O_H by the previous stage."""
    if length < 1:
        raise ValidationFailed("tower length must be at least 1")
    rng = Random(seed)
    base = o_H(0, field)
    e = base
    for k in range(2, length + 1):
        lift = general_class(e, base, rng)
        e = extension_block(e, base, lift)
        if e.mf is None:
            raise ValidationFailed("tower stage is not a matrix factorization")
    return _rename(e, f"E_{length}", f"tower of length {length}, seed {seed}")


def _rename(e: SheafHandle, name: str, prov: str, params: tuple = ()) -> SheafHandle:
    from dataclasses import replace

    return replace(e, name=name, provenance=prov, params=params, _cache={})


def extension_of_oh(classes: Sequence[Form], sub_twist: int = 0, quot_twist: int = 0) -> SheafHandle:
    """Extension of O_H(quot_twist) by O_H(sub_twist)^k with the given classes."""
    ring = classes[0].ring
    amb = double_plane(ring.field)
    w = ring.var("w")
    k = len(classes)
    src = [sub_twist - 1] * k + [quot_twist - 1]
    tgt = [sub_twist] * k + [quot_twist]
    rows = []
    for i in range(k):
        row = [w if j == i else ring.zero(1) for j in range(k)] + [classes[i]]
        rows.append(row)
    rows.append([ring.zero(quot_twist - sub_twist + 1)] * k + [w])
    m = GradedMatrix(amb, src, tgt, rows)
    return sheaf_from_matrix(m, f"ext(O_H({quot_twist}) by O_H({sub_twist})^{k})", "extension_of_oh")


def family_sheaf(
    k: int, m: int, r: int, lam: Sequence[Form] | None = None, seed: int = 7, field: Field = QQ
) -> SheafHandle:
    """E_lambda: extension of O_H(m) by O_H(k)^(2r-1) with classes lambda."""
    if k <= m:
        raise ValidationFailed("family_sheaf needs k > m")
    n = 2 * r - 1
    d = 1 + k - m
    if lam is None:
        if comb(d + 2, 2) < n:
            raise ValidationFailed("not enough independent classes")
        lam = [random_plane_form(d, seed * 1000 + i, field) for i in range(n)]
        vecs = [f.coefficient_vector() for f in lam]
        if rank_of(vecs, field) != n:
            raise ValidationFailed("drawn classes are linearly dependent")
    if len(lam) != n:
        raise ValidationFailed(f"expected {n} classes")
    e = extension_of_oh(list(lam), k, m)
    return _rename(e, f"E_lambda[k={k},m={m},r={r}]", f"family_sheaf seed {seed}")


# ---------------------------------------------------------------- the point construction


def _plane_forms_vanishing_at(point: Sequence[Any], ring: Ring) -> tuple[Form, Form]:
    fld = ring.field
    px = [fld(c) for c in point[:3]]
    kernel = kernel_of_rows([{i: v for i, v in enumerate(px) if v}], 3, fld)
    forms = []
    for vec in sorted(kernel, key=lambda v: sorted(v)):
        forms.append(sum((ring.gens()[i].scale(c) for i, c in vec.items()), ring.zero(1)))
    # Order so that the default point [0:0:1:0] yields (x, y).
    forms.sort(key=lambda f: max(f.terms), reverse=True)
    return forms[0], forms[1]


def point_ideal_presentation(point: Sequence[Any] = (0, 0, 1, 0), field: Field = QQ) -> SheafHandle:
    """I_p(1) on X for p in H: 3 generators (l1, l2, w), 4 relations."""
    if point[3] != 0:
        raise ValidationFailed("the point must lie on H = {w = 0}")
    amb = double_plane(field)
    ring = amb.ring
    l1, l2 = _plane_forms_vanishing_at(point, ring)
    w = ring.var("w")
    z = ring.zero(1)
    rows = [
        [l2, w, z, z],
        [-l1, z, w, z],
        [z, -l1, -l2, w],
    ]
    m = GradedMatrix(amb, [-1] * 4, [0] * 3, rows)
    return SheafHandle(name="I_p(1)", ambient=amb, presentation=m, provenance=f"point {list(point)}")


def nonlayered_ulrich(point: Sequence[Any] = (0, 0, 1, 0), field: Field = QQ) -> SheafHandle:
    """Mapping cone of the nontrivial extension 0 -> O_H(-1) -> E -> I_p(1) -> 0."""
    ip = point_ideal_presentation(point, field)
    amb = ip.ambient
    ring = amb.ring
    oh = o_H(-1, field)
    lift = GradedMatrix(
        amb, ip.M.source_degrees, oh.M.target_degrees, [[ring.const(1), ring.zero(0), ring.zero(0), ring.zero(0)]]
    )
    cone = extension_block(oh, ip, lift)
    m = minimalize(cone.M)
    e = sheaf_from_matrix(m, "E_p", "")
    if e.mf is None:
        raise ValidationFailed(f"minimalized cone is {m.nrows}x{m.ncols}, not square")
    return _rename(
        e,
        f"E_p{list(point)}",
        f"mapping cone over I_p(1), minimal shape {m.nrows}x{m.ncols}",
        (("point", tuple(point)),),
    )


# ---------------------------------------------------------------- spinor restriction


def _kron_blocks(a1: list[list[Form]], b1: list[list[Form]], a2: list[list[Form]], b2: list[list[Form]], ring: Ring):
    n, m = len(a1), len(a2)
    z = ring.zero(1)

    def kron_left(x: list[list[Form]]) -> list[list[Form]]:  # x ⊗ I_m
        return [[x[i][j] if k == l else z for j in range(n) for l in range(m)] for i in range(n) for k in range(m)]

    def kron_right(y: list[list[Form]], sign: int) -> list[list[Form]]:  # I_n ⊗ y
        return [
            [(y[k][l] if sign > 0 else -y[k][l]) if i == j else z for j in range(n) for l in range(m)]
            for i in range(n)
            for k in range(m)
        ]

    def block(tl, tr, bl, br):
        return [r1 + r2 for r1, r2 in zip(tl, tr)] + [r1 + r2 for r1, r2 in zip(bl, br)]

    a = block(kron_left(a1), kron_right(a2, 1), kron_right(b2, -1), kron_left(b1))
    b = block(kron_left(b1), kron_right(a2, -1), kron_right(b2, 1), kron_left(a1))
    return a, b


def clifford_factorization(field: Field = QQ) -> MatrixFactorization:
    """8x8 linear factorization of q = x0² + x1x4 + x2x5 + x3x6."""
    ring = Ring(tuple(f"x{i}" for i in range(7)), field)
    x = ring.gens()
    q = x[0] * x[0] + x[1] * x[4] + x[2] * x[5] + x[3] * x[6]
    a, b = [[x[0]]], [[x[0]]]
    for u, v in ((1, 4), (2, 5), (3, 6)):
        a, b = _kron_blocks(a, b, [[x[u]]], [[x[v]]], ring)
    amb = Ambient(ring, q)
    size = len(a)
    mm = GradedMatrix(amb, [-1] * size, [0] * size, a)
    nn = GradedMatrix(amb, [-2] * size, [-1] * size, b)
    return MatrixFactorization(q, mm, nn)


def spinor_restriction(field: Field = QQ) -> SheafHandle:
    """S_X: the spinor factorization pulled back along x0->w, x1..x3->x,y,z, x4..x6->0."""
    big = clifford_factorization(field)
    amb = double_plane(field)
    ring = amb.ring
    x, y, z, w = ring.gens()
    zero = ring.zero(1)
    images = dict(zip(big.M.ring.variables, [w, x, y, z, zero, zero, zero]))
    mf = substitute(big, images, amb)
    mf = MatrixFactorization(mf.f, mf.M.twisted(-1), mf.N.twisted(-1))
    return mf_handle(mf, amb, "S_X", "restriction of the spinor factorization of q")


# ---------------------------------------------------------------- rule-backed and planar sheaves


def rule_point_ideal(t: int = 0, point: Sequence[Any] = (0, 0, 1, 0), field: Field = QQ) -> SheafHandle:
    return SheafHandle(
        name=_named("I_p", t),
        ambient=double_plane(field),
        rule="point_ideal",
        params=(("point", tuple(point)), ("twist", t)),
        provenance="0 -> I_p -> O_X -> O_p -> 0",
    )


def rule_point(t: int = 0, point: Sequence[Any] = (0, 0, 1, 0), field: Field = QQ) -> SheafHandle:
    return SheafHandle(
        name=_named("O_p", t),
        ambient=double_plane(field),
        rule="point",
        params=(("point", tuple(point)), ("twist", t)),
        provenance="skyscraper",
    )


def rule_Epa(point: Sequence[Any] = (0, 0, 1), a: int = 1, field: Field = QQ) -> SheafHandle:
    """E_{p,a} on H = P²: extension of I_{p,H}(1) by O_H(a), locally free."""
    amb = plane(field)
    ring = amb.ring
    fld = ring.field
    px = [fld(c) for c in point[:3]]
    kernel = kernel_of_rows([{i: v for i, v in enumerate(px) if v}], 3, fld)
    l1, l2 = [sum((ring.gens()[i].scale(c) for i, c in v.items()), ring.zero(1)) for v in kernel]
    # a linear form not vanishing at p
    k = next(i for i, v in enumerate(px) if v)
    g = ring.gens()[k] ** (a + 1)
    m = GradedMatrix(amb, [-1], [a, 0, 0], [[g], [l2], [-l1]])
    return SheafHandle(
        name=f"E_p,{a}",
        ambient=amb,
        presentation=m,
        params=(("a", a), ("point", tuple(point))),
        provenance="mapping cone of I_p,H(1) with a class nonvanishing at p",
    )


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable[..., SheafHandle]
    defaults: dict
    anchor: str
    rank: Fraction | None = None
    hilbert: Callable[[int], int] | None = None
    acm_init_ulrich: tuple[bool, bool, bool] | None = None

    def build(self, **params: Any) -> SheafHandle:
        merged = dict(self.defaults)
        merged.update(params)
        return self.builder(**merged)


def _oh(t: int) -> Fraction:
    return Fraction((t + 2) * (t + 1), 2)


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("o_H", o_H, {"t": 0}, "structure sheaf of the reduced plane", Fraction(1, 2), _oh, (True, True, True)),
        CatalogEntry("o_X", o_X, {"t": 0}, "structure sheaf of the double plane", Fraction(1), lambda t: Fraction((t + 1) ** 2), (True, True, False)),
        CatalogEntry("o_Xnm", o_Xnm, {"n": 2, "m": 3, "t": 0}, "structure sheaf of X_n[m]", Fraction(1), lambda t: binom_poly(t + 3, 3) - binom_poly(t, 3), (True, True, False)),
        CatalogEntry(
            "ideal_curve",
            lambda d=2, seed=7, t=0: ideal_curve(random_plane_form(d, seed), t),
            {"d": 2, "seed": 7, "t": 0},
            "ideal of a plane curve in X",
            Fraction(1),
            lambda t: _oh(t - 1) + _oh(t - 2),
            (True, False, False),
        ),
        CatalogEntry("line_ideal", line_ideal, {"t": 0}, "I_L(1)", Fraction(1), lambda t: 2 * _oh(t), (True, True, True)),
        CatalogEntry("tower", tower, {"length": 3, "seed": 7}, "layered tower E_2r", Fraction(3, 2), lambda t: 3 * _oh(t), (True, True, True)),
        CatalogEntry(
            "family_sheaf",
            family_sheaf,
            {"k": 2, "m": 0, "r": 2, "seed": 7},
            "extension family E_lambda",
            Fraction(2),
            lambda t: 3 * _oh(t + 2) + _oh(t),
            (True, False, False),
        ),
        CatalogEntry("nonlayered_ulrich", nonlayered_ulrich, {}, "extension of I_p(1) by O_H(-1)", Fraction(3, 2), lambda t: 3 * _oh(t), (True, True, True)),
        CatalogEntry("spinor_restriction", spinor_restriction, {}, "restricted spinor bundle", Fraction(4), lambda t: 8 * _oh(t - 1), (True, False, False)),
        CatalogEntry("rule_point_ideal", rule_point_ideal, {"t": 0}, "ideal sheaf of a point", None, lambda t: Fraction((t + 1) ** 2 - 1), (False, False, False)),
        CatalogEntry("rule_point", rule_point, {"t": 0}, "skyscraper at a point", Fraction(0), lambda t: Fraction(1), None),
        CatalogEntry("rule_Epa", rule_Epa, {"a": 1}, "rank-two bundle on H", Fraction(2), None, None),
    ]
}


def build(name: str, **params: Any) -> SheafHandle:
    if name not in CATALOG:
        raise ValidationFailed(f"unknown catalog entry {name}")
    return CATALOG[name].build(**params)


def catalog_names() -> list[str]:
    return sorted(CATALOG)
