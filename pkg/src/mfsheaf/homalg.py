"""Hom and Ext spaces, endomorphism algebras, decompositions and related probes."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import Any, Sequence

import sympy

from .algebra import (
    Echelon,
    Field,
    Form,
    PieceMatrix,
    Ring,
    Vector,
    det_poly,
    kernel_of_rows,
    monomial_basis,
    monomial_index,
    rank_of,
)
from .cohomology import hilbert_polynomial, window
from .errors import (
    CharacteristicTooSmall,
    Inconclusive,
    NoMatch,
    PreconditionViolated,
    UnsupportedBacking,
)
from .presentation import (
    GradedMatrix,
    SheafHandle,
    minimalize,
    minimalize_handle,
    sheaf_from_matrix,
    vector_to_forms,
)


# ---------------------------------------------------------------- block layout helpers


class _Layout:
    """Concatenation of graded pieces S_{d_0} ⊕ S_{d_1} ⊕ ..."""

    def __init__(self, nvars: int, degrees: Sequence[int]) -> None:
        self.nvars = nvars
        self.degrees = list(degrees)
        self.offsets = []
        total = 0
        for d in self.degrees:
            self.offsets.append(total)
            total += len(monomial_basis(nvars, d))
        self.dim = total

    def index(self, block: int, mono: tuple[int, ...]) -> int:
        return self.offsets[block] + monomial_index(self.nvars, self.degrees[block])[mono]

    def monomials(self, block: int) -> list[tuple[int, ...]]:
        return monomial_basis(self.nvars, self.degrees[block])


def _add(col: Vector, k: int, v: Any, p: int | None) -> None:
    nv = col.get(k, 0) + v
    if p:
        nv %= p
    if nv:
        col[k] = nv
    else:
        col.pop(k, None)


# ---------------------------------------------------------------- chain maps and Hom


@dataclass(frozen=True, eq=False)
class ChainMap:
    """beta on generators, alpha on relations, with beta·M_E = M_F·alpha."""

    beta: GradedMatrix
    alpha: GradedMatrix

    def compose(self, other: "ChainMap") -> "ChainMap":
        """self ∘ other."""
        return ChainMap(self.beta * other.beta, self.alpha * other.alpha)


@dataclass(eq=False)
class HomSpace:
    source: SheafHandle
    target: SheafHandle
    basis: list[ChainMap]
    _vectors: list[Vector] = field(default_factory=list, repr=False)
    _solver: Any = field(default=None, repr=False)
    _unknowns: Any = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def combination(self, coeffs: Sequence[Any]) -> ChainMap:
        fld = self.source.ambient.field
        vec: Vector = {}
        for c, v in zip(coeffs, self._vectors):
            c = fld(c)
            if c:
                for k, x in v.items():
                    _add(vec, k, c * x, fld.p)
        return self._unknowns.to_chain_map(vec)

    def coordinates(self, u: ChainMap) -> list[Any]:
        """Coordinates of u in the basis, modulo homotopies."""
        vec = self._unknowns.to_vector(u)
        rem, combo = self._solver.decompose(vec)
        if rem:
            raise ValueError("map is not a chain map in this Hom space")
        fld = self.source.ambient.field
        return [combo.get(("b", k), fld.zero) for k in range(self.dim)]


class _Tagged:
    """Echelon basis that remembers how each row combines the inputs."""

    def __init__(self, fld: Field) -> None:
        self.field = fld
        self.rows: dict[int, tuple[Vector, dict]] = {}

    def decompose(self, v: Vector) -> tuple[Vector, dict]:
        p = self.field.p
        v = dict(v)
        combo: dict = {}
        for c in [c for c in v if c in self.rows]:
            a = v.get(c)
            if not a:
                continue
            row, tag = self.rows[c]
            for k, b in row.items():
                _add(v, k, -a * b, p)
            for k, b in tag.items():
                _add(combo, k, a * b, p)
        return v, combo

    def insert(self, v: Vector, label: Any) -> bool:
        p = self.field.p
        r, combo = self.decompose(v)
        if not r:
            return False
        tag = {k: (-x) % p if p else -x for k, x in combo.items()}
        _add(tag, label, 1, p)
        piv = min(r)
        inv = self.field.inv(r[piv])
        r = {k: x * inv % p if p else x * inv for k, x in r.items()}
        tag = {k: x * inv % p if p else x * inv for k, x in tag.items()}
        for c, (row, rtag) in self.rows.items():
            a = row.get(piv)
            if a:
                for k, b in r.items():
                    _add(row, k, -a * b, p)
                for k, b in tag.items():
                    _add(rtag, k, -a * b, p)
        self.rows[piv] = (r, tag)
        return True


class _Unknowns:
    """Coordinates for (beta, alpha) pairs between two presentations."""

    def __init__(self, me: GradedMatrix, mf: GradedMatrix) -> None:
        self.me, self.mf = me, mf
        n = me.ring.nvars
        self.n = n
        self.blocks: list[tuple[str, int, int, int]] = []  # (kind, row, col, degree)
        self.offsets: list[int] = []
        total = 0
        for k, bf in enumerate(mf.target_degrees):
            for i, be in enumerate(me.target_degrees):
                self.blocks.append(("b", k, i, bf - be))
        for l, af in enumerate(mf.source_degrees):
            for j, ae in enumerate(me.source_degrees):
                self.blocks.append(("a", l, j, af - ae))
        self.pos: dict[tuple[str, int, int], int] = {}
        for bi, (kind, r, c, d) in enumerate(self.blocks):
            self.offsets.append(total)
            self.pos[(kind, r, c)] = bi
            total += len(monomial_basis(n, d))
        self.dim = total

    def index(self, kind: str, r: int, c: int, mono: tuple[int, ...]) -> int:
        bi = self.pos[(kind, r, c)]
        return self.offsets[bi] + monomial_index(self.n, self.blocks[bi][3])[mono]

    def to_chain_map(self, vec: Vector) -> ChainMap:
        ring = self.me.ring
        beta = [[ring.zero(0)] * self.me.nrows for _ in range(self.mf.nrows)]
        alpha = [[ring.zero(0)] * self.me.ncols for _ in range(self.mf.ncols)]
        for bi, (kind, r, c, d) in enumerate(self.blocks):
            basis = monomial_basis(self.n, d)
            off = self.offsets[bi]
            terms = {basis[k]: vec[off + k] for k in range(len(basis)) if vec.get(off + k)}
            f = Form(ring, d, terms)
            (beta if kind == "b" else alpha)[r][c] = f
        amb = self.me.ambient
        return ChainMap(
            GradedMatrix(amb, self.me.target_degrees, self.mf.target_degrees, beta),
            GradedMatrix(amb, self.me.source_degrees, self.mf.source_degrees, alpha),
        )

    def to_vector(self, u: ChainMap) -> Vector:
        out: Vector = {}
        for bi, (kind, r, c, d) in enumerate(self.blocks):
            f = (u.beta if kind == "b" else u.alpha).entries[r][c]
            if f.terms:
                idx = monomial_index(self.n, d)
                for e, x in f.terms.items():
                    out[self.offsets[bi] + idx[e]] = x
        return out


def _presentation(e: SheafHandle) -> GradedMatrix:
    if e.presentation is None:
        raise UnsupportedBacking(f"{e.name} has no presentation")
    return e.M


def hom_basis(e: SheafHandle, f: SheafHandle) -> HomSpace:
    """Chain maps between presentations modulo homotopy."""
    key = ("hom", id(f))
    hit = e._cache.get(key)
    if hit is not None and hit[0] is f:
        return hit[1]
    me, mf = _presentation(e), _presentation(f)
    if me.ambient.ring != mf.ambient.ring:
        raise UnsupportedBacking("sheaves live on different ambients")
    fld = me.field
    p = fld.p
    unk = _Unknowns(me, mf)
    n = unk.n
    eq_layout: dict[tuple[int, int], int] = {}
    eq_off: dict[tuple[int, int], int] = {}
    total = 0
    for k, bf in enumerate(mf.target_degrees):
        for j, ae in enumerate(me.source_degrees):
            eq_off[(k, j)] = total
            eq_layout[(k, j)] = bf - ae
            total += len(monomial_basis(n, bf - ae))
    rows: list[Vector] = [{} for _ in range(total)]

    def put(k: int, j: int, mono: tuple[int, ...], col: int, v: Any) -> None:
        r = eq_off[(k, j)] + monomial_index(n, eq_layout[(k, j)])[mono]
        _add(rows[r], col, v, p)

    # beta·M_E
    for k in range(mf.nrows):
        for i in range(me.nrows):
            bi = unk.pos[("b", k, i)]
            d = unk.blocks[bi][3]
            for s, u in enumerate(monomial_basis(n, d)):
                col = unk.offsets[bi] + s
                for j in range(me.ncols):
                    for ex, c in me.entries[i][j].terms.items():
                        put(k, j, tuple(a + b for a, b in zip(u, ex)), col, c)
    # - M_F·alpha
    for l in range(mf.ncols):
        for j in range(me.ncols):
            bi = unk.pos[("a", l, j)]
            d = unk.blocks[bi][3]
            for s, u in enumerate(monomial_basis(n, d)):
                col = unk.offsets[bi] + s
                for k in range(mf.nrows):
                    for ex, c in mf.entries[k][l].terms.items():
                        put(k, j, tuple(a + b for a, b in zip(u, ex)), col, -c)
    cycles = kernel_of_rows(rows, unk.dim, fld)

    solver = _Tagged(fld)
    # homotopies h: generators of E -> relations of F
    hcount = 0
    for l, af in enumerate(mf.source_degrees):
        for i, be in enumerate(me.target_degrees):
            for u in monomial_basis(n, af - be):
                vec: Vector = {}
                for k in range(mf.nrows):
                    for ex, c in mf.entries[k][l].terms.items():
                        _add(vec, unk.index("b", k, i, tuple(a + b for a, b in zip(u, ex))), c, p)
                for j in range(me.ncols):
                    for ex, c in me.entries[i][j].terms.items():
                        _add(vec, unk.index("a", l, j, tuple(a + b for a, b in zip(u, ex))), c, p)
                solver.insert(vec, ("h", hcount))
                hcount += 1
    vectors: list[Vector] = []
    for z in cycles:
        if solver.insert(z, ("b", len(vectors))):
            vectors.append(z)
    space = HomSpace(e, f, [unk.to_chain_map(v) for v in vectors], vectors, solver, unk)
    e._cache[key] = (f, space)
    return space


def hom_dim(e: SheafHandle, f: SheafHandle) -> int:
    return hom_basis(e, f).dim


def check_chain_map(u: ChainMap, e: SheafHandle, f: SheafHandle) -> bool:
    return u.beta * e.M == f.M * u.alpha


# ---------------------------------------------------------------- maps between quotient pieces


@dataclass
class QuotientMap:
    """A map U/R_U -> V/R_V given by columns mu (images of a basis of U)."""

    field: Field
    dim_u: int
    dim_v: int
    mu: list[Vector]
    r_u: list[Vector]
    r_v: list[Vector]

    def _ranks(self) -> tuple[int, int, int]:
        rv = rank_of(self.r_v, self.field)
        both = rank_of(self.r_v + self.mu, self.field)
        ru = rank_of(self.r_u, self.field)
        return ru, rv, both - rv

    def dims(self) -> tuple[int, int]:
        """(kernel dim, cokernel dim) of the induced map."""
        ru, rv, r = self._ranks()
        return self.dim_u - ru - r, self.dim_v - rv - r

    def rank(self) -> int:
        return self._ranks()[2]

    def kernel_reps(self) -> list[Vector]:
        """Vectors of U whose image lies in R_V (spanning the kernel mod R_U)."""
        rows_cols = self.mu + self.r_v
        mat = PieceMatrix(self.field, self.dim_v, len(rows_cols), rows_cols)
        out = []
        for v in mat.kernel():
            proj = {k: x for k, x in v.items() if k < self.dim_u}
            if proj:
                out.append(proj)
        return out


def precompose(target: GradedMatrix, k: GradedMatrix) -> QuotientMap:
    """phi -> phi∘K from Hom(⊕O(K.targets), F) to Hom(⊕O(K.sources), F), F = coker(target)."""
    n = target.ring.nvars
    fld = target.field
    p = fld.p
    bf = target.target_degrees
    u_lay = _Layout(n, [b - c for c in k.target_degrees for b in bf])
    v_lay = _Layout(n, [b - d for d in k.source_degrees for b in bf])
    nb = len(bf)
    mu: list[Vector] = []
    for i in range(k.nrows):
        for kk in range(nb):
            blk = i * nb + kk
            for u in u_lay.monomials(blk):
                col: Vector = {}
                for j in range(k.ncols):
                    for ex, c in k.entries[i][j].terms.items():
                        _add(col, v_lay.index(j * nb + kk, tuple(a + b for a, b in zip(u, ex))), c, p)
                mu.append(col)

    def images(lay: _Layout, degs: Sequence[int]) -> list[Vector]:
        out = []
        for i, c in enumerate(degs):
            base = lay.offsets[i * nb]
            for col in target.piece(-c).cols:
                out.append({base + r: x for r, x in col.items()})
        return out

    return QuotientMap(
        fld, u_lay.dim, v_lay.dim, mu, images(u_lay, k.target_degrees), images(v_lay, k.source_degrees)
    )


def _vector_to_lift(vec: Vector, target: GradedMatrix, degs: Sequence[int]) -> GradedMatrix:
    """Read a vector of ⊕_j F_{-c_j} as a matrix O(c_j) -> generators of F."""
    bf = target.target_degrees
    ring = target.ring
    lay_degs = [b - c for c in degs for b in bf]
    forms = vector_to_forms(vec, lay_degs, ring)
    nb = len(bf)
    rows = [[forms[j * nb + kk] for j in range(len(degs))] for kk in range(nb)]
    return GradedMatrix(target.ambient, degs, bf, rows)


@dataclass(frozen=True)
class ExtResult:
    dim: int
    cocycles: list[GradedMatrix]


def ext1_X(e: SheafHandle, f: SheafHandle) -> ExtResult:
    """Ext^1 on the hypersurface from the 2-periodic resolution of E."""
    if e.mf is None:
        raise UnsupportedBacking("ext1_X needs an MF-backed first argument")
    tf = _presentation(f)
    m, nmat = e.mf.M, e.mf.N
    on_n = precompose(tf, nmat)  # Hom(F1, F) -> Hom(F0(-deg f), F)
    on_m = precompose(tf, m)  # Hom(F0, F) -> Hom(F1, F)
    ker_n, _ = on_n.dims()
    dim = ker_n - on_m.rank()
    fld = tf.field
    ech = Echelon(fld)
    for v in on_n.r_u + on_m.mu:
        ech.insert(v)
    cocycles = []
    for z in on_n.kernel_reps():
        if ech.insert(z):
            cocycles.append(_vector_to_lift(z, tf, m.source_degrees))
    assert len(cocycles) == dim
    return ExtResult(dim, cocycles)


def _top_ext_matrix(me: GradedMatrix, mf: GradedMatrix) -> GradedMatrix:
    """Transpose of the map whose kernel is the H^{n-1}-level Ext group."""
    n1 = me.ring.nvars
    ring = me.ring
    src: list[int] = []
    tgt: list[int] = []
    for b in me.target_degrees:
        for bf in mf.target_degrees:
            src.append(-n1 + b - bf)
    for a in me.source_degrees:
        for af in mf.source_degrees:
            src.append(-n1 + a - af)
    for b in me.target_degrees:
        for af in mf.source_degrees:
            tgt.append(-n1 + b - af)
    nbf, naf = mf.nrows, mf.ncols
    rows = []
    for i in range(me.nrows):
        for l in range(naf):
            row = []
            for i2 in range(me.nrows):
                for kk in range(nbf):
                    row.append(mf.entries[kk][l] if i2 == i else None)
            for j in range(me.ncols):
                for l2 in range(naf):
                    row.append(me.entries[i][j] if l2 == l else None)
            rows.append(row)
    fixed = [
        [x if x is not None else ring.zero(tgt[r] - src[c]) for c, x in enumerate(row)]
        for r, row in enumerate(rows)
    ]
    return GradedMatrix(me.ambient, src, tgt, fixed)


def ext_p3(i: int, e: SheafHandle, f: SheafHandle) -> int:
    """Ext^i on the ambient space via the two-term Hom complex (F aCM)."""
    if f.mf is None:
        raise PreconditionViolated(f"{f.name} is not aCM-certified")
    me, tf = _presentation(e), f.M
    if i in (0, 1):
        ker, coker = precompose(tf, me).dims()
        return ker if i == 0 else coker
    if i == 2:
        big = _top_ext_matrix(me, tf)
        piece = big.piece(0)
        return piece.nrows - piece.rank()
    raise PreconditionViolated("only Ext^0, Ext^1 and Ext^2 are available")


# ---------------------------------------------------------------- endomorphism algebra


@dataclass
class EndAlgebra:
    sheaf: SheafHandle
    hom: HomSpace
    structure: list[list[list[Any]]]  # structure[a][b] = coords of e_a e_b
    unit: list[Any]
    radical_dim: int
    radical: list[Vector]
    verdict: str

    @property
    def dim(self) -> int:
        return self.hom.dim

    @property
    def semisimple_dim(self) -> int:
        return self.dim - self.radical_dim

    def multiply(self, x: Sequence[Any], y: Sequence[Any]) -> list[Any]:
        fld = self.sheaf.ambient.field
        out = [fld.zero] * self.dim
        for a, xa in enumerate(x):
            if not xa:
                continue
            for b, yb in enumerate(y):
                if not yb:
                    continue
                c = xa * yb
                for k, s in enumerate(self.structure[a][b]):
                    if s:
                        out[k] = fld(out[k] + c * s)
        return out


def _identity(e: SheafHandle) -> ChainMap:
    m = e.M
    ring = m.ring
    one = ring.const(1)

    def eye(degs: Sequence[int]) -> GradedMatrix:
        rows = [[one if i == j else ring.zero(degs[i] - degs[j]) for j in range(len(degs))] for i in range(len(degs))]
        return GradedMatrix(m.ambient, degs, degs, rows)

    return ChainMap(eye(m.target_degrees), eye(m.source_degrees))


def end_algebra(e: SheafHandle) -> EndAlgebra:
    hit = e._cache.get("end")
    if hit is not None:
        return hit
    if e.mf is None:
        raise UnsupportedBacking("end_algebra needs an MF-backed sheaf")
    hom = hom_basis(e, e)
    fld = e.ambient.field
    dim = hom.dim
    if fld.p is not None and fld.p <= dim:
        raise CharacteristicTooSmall(f"p = {fld.p} does not exceed dim End = {dim}")
    structure = [[hom.coordinates(ua.compose(ub)) for ub in hom.basis] for ua in hom.basis]
    unit = hom.coordinates(_identity(e))
    traces = [fld(sum(structure[k][b][b] for b in range(dim))) for k in range(dim)]
    gram = [
        {b: v for b in range(dim) if (v := fld(sum(structure[a][b][k] * traces[k] for k in range(dim))))}
        for a in range(dim)
    ]
    radical = kernel_of_rows(gram, dim, fld)
    alg = EndAlgebra(e, hom, structure, unit, len(radical), radical, "")
    if alg.semisimple_dim == 1:
        alg.verdict = "indecomposable"
    elif find_idempotent(alg) is not None:
        alg.verdict = "decomposable"
    else:
        alg.verdict = "indecomposable-over-base-field-caveat"
    e._cache["end"] = alg
    return alg


def _minimal_polynomial(alg: EndAlgebra, x: Sequence[Any]) -> list[Any]:
    """Monic minimal polynomial of x, coefficients from the constant term up."""
    fld = alg.sheaf.ambient.field
    powers = [list(alg.unit)]
    ech = _Tagged(fld)
    ech.insert({k: v for k, v in enumerate(powers[0]) if v}, 0)
    while True:
        nxt = alg.multiply(powers[-1], x)
        deg = len(powers)
        vec = {k: v for k, v in enumerate(nxt) if v}
        rem, combo = ech.decompose(vec)
        if not rem:
            coeffs = [fld(-combo.get(i, 0)) for i in range(deg)] + [fld.one]
            return coeffs
        ech.insert(vec, deg)
        powers.append(nxt)


def _poly_eval(alg: EndAlgebra, coeffs: Sequence[Any], x: Sequence[Any]) -> list[Any]:
    fld = alg.sheaf.ambient.field
    out = [fld.zero] * alg.dim
    for c in reversed(coeffs):
        out = alg.multiply(out, x)
        out = [fld(o + c * u) for o, u in zip(out, alg.unit)]
    return out


def _to_sympy_poly(coeffs: Sequence[Any], fld: Field, t: sympy.Symbol) -> sympy.Poly:
    if fld.p is None:
        cs = [sympy.Rational(int(c.numerator), int(c.denominator)) for c in reversed(coeffs)]
        return sympy.Poly(cs, t, domain=sympy.QQ)
    return sympy.Poly([int(c) for c in reversed(coeffs)], t, modulus=fld.p)


def _from_sympy_coeff(c: Any, fld: Field) -> Any:
    c = sympy.Rational(c)
    return fld(int(c.p)) * fld.inv(fld(int(c.q)))


def _idempotent_from(alg: EndAlgebra, x: Sequence[Any]) -> list[Any] | None:
    """CRT idempotent from a splitting of the minimal polynomial of x."""
    fld = alg.sheaf.ambient.field
    t = sympy.Symbol("t")
    poly = _to_sympy_poly(_minimal_polynomial(alg, x), fld, t)
    _, factors = poly.factor_list()
    if len(factors) < 2:
        return None
    g1 = factors[0][0] ** factors[0][1]
    rest = poly.exquo(g1)
    # e ≡ 0 mod rest and e ≡ 1 mod g1
    s, _, h = rest.gcdex(g1)
    if h.degree() != 0:
        return None
    e_poly = (s * rest).rem(poly)
    cs = [_from_sympy_coeff(c, fld) for c in reversed(e_poly.all_coeffs())]
    return _poly_eval(alg, cs, x)


def lift_idempotent(alg: EndAlgebra, e: Sequence[Any]) -> list[Any]:
    """Newton iteration e <- 3e² - 2e³ until e² = e exactly."""
    fld = alg.sheaf.ambient.field
    e = list(e)
    for _ in range(alg.dim + 2):
        e2 = alg.multiply(e, e)
        if e2 == e:
            return e
        e3 = alg.multiply(e2, e)
        e = [fld(3 * a - 2 * b) for a, b in zip(e2, e3)]
    raise ArithmeticError("idempotent lifting did not converge")


def find_idempotent(alg: EndAlgebra, seed: int = 0, budget: int = 12) -> list[Any] | None:
    """A nontrivial idempotent of End(E), if one is found."""
    fld = alg.sheaf.ambient.field
    dim = alg.dim
    rng = Random(seed)
    candidates: list[list[Any]] = []
    for k in range(dim):
        candidates.append([fld.one if i == k else fld.zero for i in range(dim)])
    for _ in range(budget):
        candidates.append([fld.random(rng, 5) for _ in range(dim)])
    zero = [fld.zero] * dim
    for x in candidates:
        e = _idempotent_from(alg, x)
        if e is None:
            continue
        e = lift_idempotent(alg, e)
        if e != zero and e != alg.unit:
            return e
    return None


def _summand(e: SheafHandle, beta_comp: GradedMatrix, name: str) -> SheafHandle:
    aug = e.M.hstack(
        GradedMatrix(e.M.ambient, beta_comp.source_degrees, beta_comp.target_degrees, beta_comp.entries)
    )
    m = minimalize(aug)
    return sheaf_from_matrix(m, name, f"summand of {e.name}")


def decompose(e: SheafHandle, _depth: int = 0) -> list[SheafHandle]:
    """Krull–Schmidt splitting through idempotents of End(E)."""
    e = minimalize_handle(e)
    if e.mf is None:
        return [e]
    alg = end_algebra(e)
    if alg.verdict != "decomposable":
        return [e]
    idem = find_idempotent(alg)
    assert idem is not None
    fld = e.ambient.field
    u = alg.hom.combination(idem)
    eye = _identity(e).beta
    ring = e.M.ring
    comp_rows = [
        [eye.entries[i][j] - u.beta.entries[i][j] for j in range(eye.ncols)] for i in range(eye.nrows)
    ]
    one_minus = GradedMatrix(e.M.ambient, eye.source_degrees, eye.target_degrees, comp_rows)
    first = _summand(e, one_minus, f"{e.name}[e]")
    second = _summand(e, u.beta, f"{e.name}[1-e]")
    return decompose(first, _depth + 1) + decompose(second, _depth + 1)


# ---------------------------------------------------------------- isomorphism


def _surjective(beta: GradedMatrix, f: SheafHandle) -> bool:
    aug = f.M.hstack(beta)
    bs = f.M.target_degrees
    for t in range(-max(bs), -min(bs) + 5):
        if aug.piece(t).cokernel_dim() != 0:
            return False
    return True


def _constant_part_det(hom: HomSpace) -> Form | None:
    """det of the degree-zero part of a generic Hom element, over a parameter ring."""
    if hom.dim == 0:
        return None
    fld = hom.source.ambient.field
    params = Ring(tuple(f"c{k}" for k in range(hom.dim)), fld)
    gens = params.gens()
    nr = hom.target.M.nrows
    nc = hom.source.M.nrows
    if nr != nc:
        return None
    rows = []
    for i in range(nr):
        row = params.zero(1)
        cells = []
        for j in range(nc):
            acc = params.zero(1)
            for k, u in enumerate(hom.basis):
                x = u.beta.entries[i][j]
                if x.degree == 0 and x.terms:
                    acc = acc + gens[k].scale(x.constant())
            cells.append(acc)
        rows.append(cells)
    return det_poly(rows)


@dataclass(frozen=True)
class IsoWitness:
    isomorphic: bool
    certified: str  # "surjections", "hilbert", "no-maps", "generic-det"
    forward: ChainMap | None = None


def isomorphism_test(e: SheafHandle, f: SheafHandle, seed: int = 0, budget: int = 8) -> IsoWitness:
    if hilbert_polynomial(e) != hilbert_polynomial(f):
        return IsoWitness(False, "hilbert")
    e, f = minimalize_handle(e), minimalize_handle(f)
    if sorted(e.M.target_degrees) != sorted(f.M.target_degrees):
        return IsoWitness(False, "generator-degrees")
    h_ef, h_fe = hom_basis(e, f), hom_basis(f, e)
    if h_ef.dim == 0 or h_fe.dim == 0:
        return IsoWitness(False, "no-maps")
    fld = e.ambient.field
    rng = Random(seed)
    for _ in range(budget):
        u = h_ef.combination([fld.random(rng) for _ in range(h_ef.dim)])
        v = h_fe.combination([fld.random(rng) for _ in range(h_fe.dim)])
        if _surjective(u.beta, f) and _surjective(v.beta, e):
            return IsoWitness(True, "surjections", u)
    det = _constant_part_det(h_ef)
    if det is not None and det.is_zero():
        return IsoWitness(False, "generic-det")
    raise Inconclusive(f"no isomorphism found between {e.name} and {f.name} within {budget} draws")


def is_isomorphic(e: SheafHandle, f: SheafHandle, seed: int = 0) -> bool:
    return isomorphism_test(e, f, seed).isomorphic


# ---------------------------------------------------------------- kernel of w, restriction


@dataclass(frozen=True)
class NonSplitReport:
    hilbert_function: dict[int, int]
    residual: dict[int, int]


def _w(ring: Ring) -> Form:
    return ring.var("w") if "w" in ring.variables else ring.gens()[-1]


def _multiplication_map(m: GradedMatrix, g: Form, t: int) -> QuotientMap:
    """Multiplication by g from E_t to E_{t+deg g}, E = coker(m)."""
    n = m.ring.nvars
    p = m.field.p
    d = g.degree
    u_lay = _Layout(n, [b + t for b in m.target_degrees])
    v_lay = _Layout(n, [b + t + d for b in m.target_degrees])
    mu = []
    for blk in range(len(m.target_degrees)):
        for u in u_lay.monomials(blk):
            col: Vector = {}
            for ex, c in g.terms.items():
                _add(col, v_lay.index(blk, tuple(a + b for a, b in zip(u, ex))), c, p)
            mu.append(col)
    return QuotientMap(m.field, u_lay.dim, v_lay.dim, mu, m.piece(t).cols, m.piece(t + d).cols)


def kernel_of_w_hilbert(e: SheafHandle, ts: range | None = None) -> dict[int, int]:
    m = _presentation(e)
    w = _w(m.ring)
    ts = ts if ts is not None else window(e)
    return {t: _multiplication_map(m, w, t).dims()[0] for t in ts}


def _oh_h0(s: int) -> int:
    return (s + 2) * (s + 1) // 2 if s >= 0 else 0


def kernel_of_w(e: SheafHandle, ts: range | None = None) -> list[int] | NonSplitReport:
    """Twists t_i with ker(w) = ⊕ O_H(t_i), or a report when no such fit exists."""
    hf = kernel_of_w_hilbert(e, ts)
    resid = dict(hf)
    twists: list[int] = []
    for t in sorted(resid):
        c = resid[t]
        if c < 0:
            return NonSplitReport(hf, resid)
        if c:
            twists.extend([-t] * c)
            for s in resid:
                if s >= t:
                    resid[s] -= c * _oh_h0(s - t)
    if any(resid.values()):
        return NonSplitReport(hf, resid)
    return sorted(twists, reverse=True)


@dataclass(frozen=True)
class Restriction:
    hilbert_function: dict[int, int]
    presentation: GradedMatrix


def restrict_to_H(e: SheafHandle, ts: range | None = None) -> Restriction:
    m = _presentation(e)
    ring = m.ring
    wname = "w" if "w" in ring.variables else ring.variables[-1]
    small = Ring(tuple(v for v in ring.variables if v != wname), ring.field)
    red = m.mod_variable(wname, small)
    # the w·I columns become zero on H and are dropped
    ts = ts if ts is not None else window(e)
    return Restriction({t: red.piece(t).cokernel_dim() for t in ts}, red)


# ---------------------------------------------------------------- images in O_X(1)


_REFERENCE_CASES = {
    "a": ("O_X(1)", lambda t: Fraction((t + 2) ** 2)),
    "c": ("I_L(1)", lambda t: Fraction((t + 2) ** 2 - (t + 2))),
    "d": ("I_A(1)", lambda t: Fraction((t + 2) ** 2 - 2)),
    "e": ("I_p(1)", lambda t: Fraction((t + 2) ** 2 - 1)),
    "f": ("O_X", lambda t: Fraction((t + 1) ** 2)),
}


@dataclass(frozen=True)
class ImageClass:
    case: str
    label: str
    hilbert_function: dict[int, int]


def image_hilbert_function(u: ChainMap, target: SheafHandle, ts: range) -> dict[int, int]:
    m = target.M
    out = {}
    for t in ts:
        base = m.piece(t).cols
        gens = GradedMatrix(m.ambient, u.beta.source_degrees, u.beta.target_degrees, u.beta.entries)
        extra = gens.piece(t).cols
        out[t] = rank_of(base + extra, m.field) - rank_of(base, m.field)
    return out


def classify_image(u: ChainMap, target: SheafHandle, ts: range | None = None) -> ImageClass:
    """Match the image of u: E -> O_X(1) against the reference Hilbert functions."""
    ts = ts if ts is not None else range(-3, 8)
    hf = image_hilbert_function(u, target, ts)
    tail = [t for t in ts if t >= 2]
    for case, (label, ref) in _REFERENCE_CASES.items():
        if all(hf[t] == ref(t) for t in tail):
            return ImageClass(case, label, hf)
    vals = [hf[t] for t in tail]
    diffs2 = [vals[i + 2] - 2 * vals[i + 1] + vals[i] for i in range(len(vals) - 2)]
    if vals and all(d == 1 for d in diffs2):
        return ImageClass("b", "O_H", hf)
    raise NoMatch("image matches none of the reference cases", [hf[t] for t in ts])


# ---------------------------------------------------------------- point sheaves


def ext1_oh_point_ideal(o_h: SheafHandle, o_x: SheafHandle, point: Sequence[Any]) -> int:
    """ext^1_X(O_H(a), I_p(s)) from 0 -> I_p -> O_X -> O_p -> 0.

    ``o_h`` is O_H(a) and ``o_x`` is O_X(s), both MF-backed; p lies on H.
    """
    hom_ox = hom_basis(o_h, o_x)
    fld = o_h.ambient.field
    # evaluation Hom(O_H(a), O_X(s)) -> Hom(O_H(a), O_p) = k
    values = [u.beta.entries[0][0].evaluate(point) if u.beta.entries[0][0].terms else fld.zero for u in hom_ox.basis]
    eval_rank = 1 if any(values) else 0
    hom_op = 1  # w acts by zero on O_p, so O_H -> O_p is determined by one value
    ext_ox = ext1_X(o_h, o_x).dim
    if ext_ox:
        raise UnsupportedBacking("Ext^1(O_H, O_X(s)) is nonzero; the dual route does not apply")
    return hom_op - eval_rank
