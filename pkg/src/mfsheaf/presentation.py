"""Graded matrices, matrix factorizations and sheaf handles.

A sheaf is presented as the cokernel of ``M: ⊕ O(a_j) -> ⊕ O(b_i)``.  Entry
``M[i][j]`` is a form of degree ``b_i - a_j``.  The generator of ``O(b)``
sits in degree ``-b`` of the graded module, so the degree-t piece of the
target is ``⊕ S_{b_i + t}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from .algebra import (
    Field,
    Form,
    PieceMatrix,
    Ring,
    det_poly,
    monomial_basis,
    monomial_index,
    parse_form,
)
from .errors import (
    AmbientMismatch,
    DegreeMismatch,
    NotAnnihilated,
    ParseError,
    SubstitutionNotCompatible,
    UnsupportedBacking,
)


@dataclass(frozen=True)
class Ambient:
    """Projective space with coordinate ring ``ring`` and optional hypersurface ``f``."""

    ring: Ring
    f: Form | None

    @property
    def dim(self) -> int:
        return self.ring.nvars - 1

    @property
    def field(self) -> Field:
        return self.ring.field


class GradedMatrix:
    __slots__ = ("ambient", "source_degrees", "target_degrees", "entries", "_pieces")

    def __init__(
        self,
        ambient: Ambient,
        source_degrees: Sequence[int],
        target_degrees: Sequence[int],
        entries: Sequence[Sequence[Form]],
    ) -> None:
        self.ambient = ambient
        self.source_degrees = tuple(source_degrees)
        self.target_degrees = tuple(target_degrees)
        rows = []
        if len(entries) != len(self.target_degrees):
            raise DegreeMismatch("row count differs from the number of target degrees")
        for i, row in enumerate(entries):
            if len(row) != len(self.source_degrees):
                raise DegreeMismatch("column count differs from the number of source degrees")
            out = []
            for j, e in enumerate(row):
                d = self.target_degrees[i] - self.source_degrees[j]
                if e.ring != ambient.ring:
                    raise AmbientMismatch("entry lives in a different ring")
                if e.is_zero():
                    e = ambient.ring.zero(d)
                elif e.degree != d:
                    raise DegreeMismatch(f"entry ({i},{j}) has degree {e.degree}, expected {d}")
                out.append(e)
            rows.append(tuple(out))
        self.entries = tuple(rows)
        self._pieces: dict[int, PieceMatrix] = {}

    @property
    def ring(self) -> Ring:
        return self.ambient.ring

    @property
    def field(self) -> Field:
        return self.ambient.ring.field

    @property
    def nrows(self) -> int:
        return len(self.target_degrees)

    @property
    def ncols(self) -> int:
        return len(self.source_degrees)

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    @property
    def det_degree(self) -> int:
        return sum(self.target_degrees) - sum(self.source_degrees)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedMatrix):
            return NotImplemented
        return (
            self.ambient == other.ambient
            and self.source_degrees == other.source_degrees
            and self.target_degrees == other.target_degrees
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash((self.source_degrees, self.target_degrees, self.entries))

    def __repr__(self) -> str:
        rows = "; ".join(", ".join(str(e) for e in r) for r in self.entries)
        return f"GradedMatrix(src={list(self.source_degrees)}, tgt={list(self.target_degrees)}, [{rows}])"

    def __mul__(self, other: "GradedMatrix") -> "GradedMatrix":
        if self.source_degrees != other.target_degrees:
            raise DegreeMismatch("inner degrees do not match")
        ring = self.ring
        rows = []
        for i, b in enumerate(self.target_degrees):
            row = []
            for j, a in enumerate(other.source_degrees):
                acc = ring.zero(b - a)
                for k in range(self.ncols):
                    x, y = self.entries[i][k], other.entries[k][j]
                    if x and y:
                        acc = acc + x * y
                row.append(acc)
            rows.append(row)
        return GradedMatrix(self.ambient, other.source_degrees, self.target_degrees, rows)

    def scaled_identity(self, f: Form, degrees: Sequence[int], shift: int) -> "GradedMatrix":
        ring = self.ring
        rows = [
            [f if i == j else ring.zero(degrees[i] - degrees[j] + shift) for j in range(len(degrees))]
            for i in range(len(degrees))
        ]
        return GradedMatrix(self.ambient, [d - shift for d in degrees], degrees, rows)

    def twisted(self, t: int) -> "GradedMatrix":
        return GradedMatrix(
            self.ambient,
            [a + t for a in self.source_degrees],
            [b + t for b in self.target_degrees],
            self.entries,
        )

    def transpose(self) -> "GradedMatrix":
        """The dual map ⊕O(-b_i) -> ⊕O(-a_j)."""
        rows = [[self.entries[i][j] for i in range(self.nrows)] for j in range(self.ncols)]
        return GradedMatrix(
            self.ambient, [-b for b in self.target_degrees], [-a for a in self.source_degrees], rows
        )

    def drop(self, rows: Iterable[int] = (), cols: Iterable[int] = ()) -> "GradedMatrix":
        rs, cs = set(rows), set(cols)
        keep_r = [i for i in range(self.nrows) if i not in rs]
        keep_c = [j for j in range(self.ncols) if j not in cs]
        return GradedMatrix(
            self.ambient,
            [self.source_degrees[j] for j in keep_c],
            [self.target_degrees[i] for i in keep_r],
            [[self.entries[i][j] for j in keep_c] for i in keep_r],
        )

    def hstack(self, other: "GradedMatrix") -> "GradedMatrix":
        if self.target_degrees != other.target_degrees:
            raise DegreeMismatch("row degrees differ")
        return GradedMatrix(
            self.ambient,
            self.source_degrees + other.source_degrees,
            self.target_degrees,
            [r1 + r2 for r1, r2 in zip(self.entries, other.entries)],
        )

    def mod_variable(self, name: str, ring: Ring) -> "GradedMatrix":
        """Set ``name`` to zero and drop it from the ring."""
        k = self.ring.variables.index(name)
        amb = Ambient(ring, None)

        def cut(e: Form) -> Form:
            terms = {m[:k] + m[k + 1 :]: c for m, c in e.terms.items() if m[k] == 0}
            return Form(ring, e.degree, terms)

        return GradedMatrix(
            amb, self.source_degrees, self.target_degrees, [[cut(e) for e in r] for r in self.entries]
        )

    def piece(self, t: int) -> PieceMatrix:
        cached = self._pieces.get(t)
        if cached is None:
            cached = _build_piece(self, t)
            self._pieces[t] = cached
        return cached


def _build_piece(m: GradedMatrix, t: int) -> PieceMatrix:
    n = m.ring.nvars
    p = m.field.p
    offsets = []
    total = 0
    for b in m.target_degrees:
        offsets.append(total)
        total += len(monomial_basis(n, b + t))
    cols: list[dict[int, Any]] = []
    for j, a in enumerate(m.source_degrees):
        for u in monomial_basis(n, a + t):
            col: dict[int, Any] = {}
            for i, b in enumerate(m.target_degrees):
                entry = m.entries[i][j]
                if not entry.terms:
                    continue
                idx = monomial_index(n, b + t)
                off = offsets[i]
                for e, c in entry.terms.items():
                    r = off + idx[tuple(x + y for x, y in zip(e, u))]
                    v = col.get(r, 0) + c
                    if p:
                        v %= p
                    if v:
                        col[r] = v
                    else:
                        col.pop(r, None)
            cols.append(col)
    return PieceMatrix(m.field, total, len(cols), cols)


def graded_piece_map(m: GradedMatrix, t: int) -> PieceMatrix:
    """Scalar matrix of ``m`` from ⊕ S_{a_j+t} to ⊕ S_{b_i+t}."""
    return m.piece(t)


def vector_to_forms(vec: dict[int, Any], degrees: Sequence[int], ring: Ring) -> list[Form]:
    """Split a piece vector into one form per summand of the given degrees."""
    n = ring.nvars
    out = []
    off = 0
    for d in degrees:
        basis = monomial_basis(n, d)
        terms = {basis[k - off]: v for k, v in vec.items() if off <= k < off + len(basis)}
        out.append(Form(ring, d, terms))
        off += len(basis)
    return out


def forms_to_vector(forms: Sequence[Form], degrees: Sequence[int]) -> dict[int, Any]:
    out: dict[int, Any] = {}
    off = 0
    for f, d in zip(forms, degrees):
        n = f.ring.nvars
        if f.terms:
            if f.degree != d:
                raise DegreeMismatch("form degree differs from the piece degree")
            idx = monomial_index(n, d)
            for e, c in f.terms.items():
                out[off + idx[e]] = c
        off += len(monomial_basis(n, d))
    return out


# ---------------------------------------------------------------- factorizations


@dataclass(frozen=True, eq=False)
class MatrixFactorization:
    f: Form
    M: GradedMatrix
    N: GradedMatrix

    def __post_init__(self) -> None:
        if not (self.M.is_square and self.N.is_square and self.M.nrows == self.N.nrows):
            raise DegreeMismatch("factorization matrices must be square of the same size")
        e = self.f.degree
        if self.N.target_degrees != self.M.source_degrees or self.N.source_degrees != tuple(
            b - e for b in self.M.target_degrees
        ):
            raise DegreeMismatch("partner degrees do not match")
        fm = self.M.scaled_identity(self.f, self.M.target_degrees, e)
        fn = self.N.scaled_identity(self.f, self.N.target_degrees, e)
        if self.M * self.N != fm or self.N * self.M.twisted(-e) != fn:
            raise NotAnnihilated("M·N or N·M differs from f·I")

    @property
    def size(self) -> int:
        return self.M.nrows

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MatrixFactorization) and (self.f, self.M, self.N) == (
            other.f,
            other.M,
            other.N,
        )

    def __hash__(self) -> int:
        return hash(self.M)


def _is_unit_power(det: Form, f: Form) -> bool:
    """Whether det = unit · f^k for some k in (1/deg f)·Z."""
    if det.is_zero():
        return False
    e, big = f.degree, det.degree
    if big % e == 0:
        target = f ** (big // e)
        lhs = det
    else:
        target = f ** big
        lhs = det ** e
    lead = max(target.terms)
    if lead not in lhs.terms:
        return False
    ratio = lhs.terms[lead] * lhs.ring.field.inv(target.terms[lead])
    return lhs == target.scale(ratio)


def complete_factorization(m: GradedMatrix, f: Form, check_det: bool = True) -> MatrixFactorization:
    """Solve M·N = f·I degree by degree; raise NotAnnihilated when impossible."""
    if not m.is_square:
        raise DegreeMismatch(f"presentation is {m.nrows}x{m.ncols}, not square")
    if f.ring != m.ring:
        raise AmbientMismatch("hypersurface lives in a different ring")
    if m.det_degree <= 0:
        raise DegreeMismatch("determinant degree must be positive")
    if check_det and not _is_unit_power(det_poly(m), f):
        raise NotAnnihilated("det(M) is not a unit times a power of f")
    e = f.degree
    ring = m.ring
    cols: list[list[Form]] = []
    for i, b in enumerate(m.target_degrees):
        t = e - b
        target = [f if k == i else ring.zero(bk + t) for k, bk in enumerate(m.target_degrees)]
        sol = m.piece(t).solve(forms_to_vector(target, [bk + t for bk in m.target_degrees]))
        if sol is None:
            raise NotAnnihilated(f"f·e_{i} is not in the image of M")
        cols.append(vector_to_forms(sol, [a + t for a in m.source_degrees], ring))
    rows = [[cols[i][j] for i in range(m.nrows)] for j in range(m.ncols)]
    n = GradedMatrix(m.ambient, [b - e for b in m.target_degrees], m.source_degrees, rows)
    return MatrixFactorization(f, m, n)


# ---------------------------------------------------------------- sheaf handles


@dataclass(frozen=True, eq=False)
class SheafHandle:
    """A sheaf backed by a matrix factorization, a resolution or a rule.

    ``presentation`` is always the matrix whose cokernel is the sheaf (for
    MF-backed handles it equals ``mf.M``).  Rule-backed handles carry a rule
    name and parameters instead.
    """

    name: str
    ambient: Ambient
    presentation: GradedMatrix | None = None
    mf: MatrixFactorization | None = None
    rule: str | None = None
    params: tuple[tuple[str, Any], ...] = ()
    provenance: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def kind(self) -> str:
        if self.mf is not None:
            return "mf"
        if self.presentation is not None:
            return "resolution"
        return "rule"

    @property
    def M(self) -> GradedMatrix:
        if self.presentation is None:
            raise UnsupportedBacking(f"{self.name} has no presentation")
        return self.presentation

    @property
    def param(self) -> dict[str, Any]:
        return dict(self.params)

    def __repr__(self) -> str:
        return f"SheafHandle({self.name!r}, kind={self.kind})"


def mf_handle(mf: MatrixFactorization, ambient: Ambient, name: str, provenance: str = "") -> SheafHandle:
    return SheafHandle(name=name, ambient=ambient, presentation=mf.M, mf=mf, provenance=provenance)


def sheaf_from_matrix(m: GradedMatrix, name: str, provenance: str = "") -> SheafHandle:
    """MF-backed when the ambient has a hypersurface and M is square, else resolution-backed."""
    if m.ambient.f is not None and m.is_square:
        mf = complete_factorization(m, m.ambient.f)
        return mf_handle(mf, m.ambient, name, provenance)
    return SheafHandle(name=name, ambient=m.ambient, presentation=m, provenance=provenance)


def twist(e: SheafHandle, t: int) -> SheafHandle:
    name = e.name if t == 0 else f"{e.name}({t:+d})"
    if e.kind == "rule":
        params = dict(e.params)
        params["twist"] = params.get("twist", 0) + t
        return replace(e, name=name, params=tuple(sorted(params.items())), _cache={})
    m = e.M.twisted(t)
    if e.mf is not None:
        mf = MatrixFactorization(e.mf.f, m, e.mf.N.twisted(t))
        return replace(e, name=name, presentation=m, mf=mf, _cache={})
    return replace(e, name=name, presentation=m, _cache={})


def _block_diag(a: GradedMatrix, b: GradedMatrix) -> GradedMatrix:
    ring = a.ring
    rows = []
    for i, bi in enumerate(a.target_degrees):
        rows.append(list(a.entries[i]) + [ring.zero(bi - aj) for aj in b.source_degrees])
    for i, bi in enumerate(b.target_degrees):
        rows.append([ring.zero(bi - aj) for aj in a.source_degrees] + list(b.entries[i]))
    return GradedMatrix(
        a.ambient, a.source_degrees + b.source_degrees, a.target_degrees + b.target_degrees, rows
    )


def direct_sum(e: SheafHandle, f: SheafHandle) -> SheafHandle:
    if e.ambient != f.ambient:
        raise AmbientMismatch("summands live on different ambients")
    if e.kind == "rule" or f.kind == "rule":
        raise UnsupportedBacking("direct sums of rule-backed sheaves are not supported")
    m = _block_diag(e.M, f.M)
    name = f"{e.name} + {f.name}"
    if e.mf is not None and f.mf is not None:
        mf = MatrixFactorization(e.mf.f, m, _block_diag(e.mf.N, f.mf.N))
        return mf_handle(mf, e.ambient, name, "direct_sum")
    return SheafHandle(name=name, ambient=e.ambient, presentation=m, provenance="direct_sum")


def substitute(
    mf: MatrixFactorization, images: Mapping[str, Form], target: Ambient
) -> MatrixFactorization:
    """Substitute each variable by a linear form of the new ambient ring."""
    ring = mf.M.ring
    imgs = [images[v] for v in ring.variables]
    if any(not g.is_zero() and g.degree != 1 for g in imgs):
        raise SubstitutionNotCompatible("substitution images must be linear forms")
    imgs = [g if not g.is_zero() else target.ring.zero(1) for g in imgs]
    assert target.f is not None
    new_f = mf.f.substitute(imgs, target.ring)
    if new_f.is_zero() or new_f.degree != target.f.degree:
        raise SubstitutionNotCompatible("f does not map to a multiple of the new hypersurface")
    lead = max(target.f.terms)
    if lead not in new_f.terms:
        raise SubstitutionNotCompatible("f does not map to a multiple of the new hypersurface")
    unit = new_f.terms[lead] * target.field.inv(target.f.terms[lead])
    if new_f != target.f.scale(unit):
        raise SubstitutionNotCompatible("f does not map to a multiple of the new hypersurface")

    def sub(m: GradedMatrix, scale: Any = 1) -> GradedMatrix:
        rows = [[e.substitute(imgs, target.ring).scale(scale) for e in r] for r in m.entries]
        return GradedMatrix(target, m.source_degrees, m.target_degrees, rows)

    # M·N = unit·f_new, so rescale N to keep the identity exact.
    return MatrixFactorization(target.f, sub(mf.M), sub(mf.N, target.field.inv(unit)))


def extension_block(f_sub: SheafHandle, e_quot: SheafHandle, lift: GradedMatrix) -> SheafHandle:
    """Middle term [[M_F, lift],[0, M_E]] of an extension of E by F."""
    if f_sub.ambient != e_quot.ambient:
        raise AmbientMismatch("extension pieces live on different ambients")
    mf_, me = f_sub.M, e_quot.M
    if lift.source_degrees != me.source_degrees or lift.target_degrees != mf_.target_degrees:
        raise DegreeMismatch("lift must map the relations of E to the generators of F")
    ring = mf_.ring
    rows = [list(mf_.entries[i]) + list(lift.entries[i]) for i in range(mf_.nrows)]
    for i, b in enumerate(me.target_degrees):
        rows.append([ring.zero(b - a) for a in mf_.source_degrees] + list(me.entries[i]))
    m = GradedMatrix(
        mf_.ambient, mf_.source_degrees + me.source_degrees, mf_.target_degrees + me.target_degrees, rows
    )
    name = f"ext({e_quot.name} by {f_sub.name})"
    return sheaf_from_matrix(m, name, "extension_block")


def _pivot(m: GradedMatrix, i: int, j: int) -> GradedMatrix:
    ring = m.ring
    u = m.entries[i][j]
    inv = ring.field.inv(u.constant())
    rows = []
    for k in range(m.nrows):
        if k == i:
            continue
        row = []
        for l in range(m.ncols):
            if l == j:
                continue
            e = m.entries[k][l]
            a, b = m.entries[k][j], m.entries[i][l]
            if a and b:
                e = e - (a * b).scale(inv)
            row.append(e)
        rows.append(row)
    return GradedMatrix(
        m.ambient,
        [a for l, a in enumerate(m.source_degrees) if l != j],
        [b for k, b in enumerate(m.target_degrees) if k != i],
        rows,
    )


def _redundant_column(m: GradedMatrix) -> int | None:
    """A column lying in the S-span of the remaining columns, if any."""
    for j in range(m.ncols):
        col = [m.entries[i][j] for i in range(m.nrows)]
        if all(c.is_zero() for c in col):
            return j
        rest = m.drop(cols=[j])
        t = -m.source_degrees[j]
        vec = forms_to_vector(col, [b + t for b in m.target_degrees])
        if rest.ncols and rest.piece(t).solve(vec) is not None:
            return j
    return None


def minimalize(m: GradedMatrix) -> GradedMatrix:
    """Pivot away unit entries, then drop relations generated by the others."""
    while True:
        hit = next(
            ((i, j) for i in range(m.nrows) for j in range(m.ncols) if m.entries[i][j].is_unit()),
            None,
        )
        if hit is None:
            break
        m = _pivot(m, *hit)
    while True:
        j = _redundant_column(m)
        if j is None:
            return m
        m = m.drop(cols=[j])


def minimalize_handle(e: SheafHandle) -> SheafHandle:
    m = minimalize(e.M)
    if m == e.M:
        return e
    return sheaf_from_matrix(m, e.name, (e.provenance + "; minimalized").lstrip("; "))


# ---------------------------------------------------------------- serialization


def to_json_dict(e: SheafHandle | MatrixFactorization | GradedMatrix, name: str | None = None) -> dict:
    partner = None
    if isinstance(e, SheafHandle):
        if e.kind == "rule":
            raise UnsupportedBacking(f"{e.name} is rule-backed and has no matrix")
        name = name or e.name
        m = e.M
        partner = e.mf.N if e.mf is not None else None
    elif isinstance(e, MatrixFactorization):
        m, partner = e.M, e.N
    else:
        m = e
    amb = m.ambient
    out: dict[str, Any] = {
        "field": amb.field.to_json(),
        "variables": list(amb.ring.variables),
        "hypersurface": str(amb.f) if amb.f is not None else None,
        "source_degrees": list(m.source_degrees),
        "target_degrees": list(m.target_degrees),
        "matrix": [[str(x) for x in row] for row in m.entries],
    }
    if partner is not None:
        out["partner"] = [[str(x) for x in row] for row in partner.entries]
    if name:
        out["name"] = name
    return out


def dumps(e: SheafHandle | MatrixFactorization | GradedMatrix, name: str | None = None) -> str:
    return json.dumps(to_json_dict(e, name), indent=2) + "\n"


def from_json_dict(data: Mapping[str, Any]) -> SheafHandle:
    try:
        fld = Field.from_json(data["field"])
        ring = Ring(tuple(data["variables"]), fld)
        hyp = data.get("hypersurface")
        f = parse_form(ring, hyp) if hyp is not None else None
        amb = Ambient(ring, f)
        src = [int(a) for a in data["source_degrees"]]
        tgt = [int(b) for b in data["target_degrees"]]
        rows = [
            [parse_form(ring, s, tgt[i] - src[j]) for j, s in enumerate(row)]
            for i, row in enumerate(data["matrix"])
        ]
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]}", str(data)[:60]) from None
    m = GradedMatrix(amb, src, tgt, rows)
    name = data.get("name", "sheaf")
    if "partner" in data and f is not None:
        e = f.degree
        nsrc = [b - e for b in tgt]
        nrows = [
            [parse_form(ring, s, src[i] - nsrc[j]) for j, s in enumerate(row)]
            for i, row in enumerate(data["partner"])
        ]
        n = GradedMatrix(amb, nsrc, src, nrows)
        return mf_handle(MatrixFactorization(f, m, n), amb, name, "file")
    return sheaf_from_matrix(m, name, "file")


def loads(text: str) -> SheafHandle:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, text[:60], exc.lineno, exc.colno) from None
    return from_json_dict(data)


def io_roundtrip(e: SheafHandle) -> SheafHandle:
    return loads(dumps(e))
