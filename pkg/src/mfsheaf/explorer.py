"""Random and structured sampling of linear matrix factorizations w·I + L of w²."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from random import Random
from typing import Iterator

from .algebra import GF, Field, Form, format_form
from .catalog import double_plane
from .cohomology import cohomology, hilbert_polynomial, is_ulrich
from .errors import DegreeMismatch, NotAnnihilated, ValidationFailed
from .homalg import _surjective, decompose, hom_basis
from .presentation import GradedMatrix, SheafHandle, complete_factorization, minimalize, sheaf_from_matrix

H0_WINDOW = range(-1, 3)


@dataclass(frozen=True)
class SampleRecord:
    seed: int
    size: int
    L: list[list[str]]
    source: str
    rank: str
    h0: list[int]
    decomposition: list[str]
    has_OH_quotient: bool
    layered_witness: bool
    ulrich: bool

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class CensusReport:
    size: int
    p: int
    samples: int
    seed: int
    accepted: int = 0
    rejected: int = 0
    by_source: dict[str, int] = field(default_factory=dict)
    decomposition_types: dict[str, int] = field(default_factory=dict)
    without_OH_quotient: int = 0
    without_layered_witness: int = 0
    non_layered_candidates: list[list[list[str]]] = field(default_factory=list)
    ulrich: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- drawing L


def _linear(ring, rng: Random, fld: Field, sparse: bool = False) -> Form:
    x, y, z, _ = ring.gens()
    if sparse:
        if rng.random() < 0.5:
            return ring.zero(1)
        return [x, y, z][rng.randrange(3)].scale(fld.random(rng))
    return sum((v.scale(fld.random(rng)) for v in (x, y, z)), ring.zero(1))


def _constant_invertible(k: int, rng: Random, fld: Field) -> tuple[list[list], list[list]]:
    """Random invertible P with its inverse."""
    while True:
        p = [[fld.random(rng) for _ in range(k)] for _ in range(k)]
        try:
            return p, _inverse(p, fld)
        except ValidationFailed:
            continue


def _matmul_forms(a: list[list[Form]], b: list[list[Form]], ring, deg: int) -> list[list[Form]]:
    n, m, l = len(a), len(b), len(b[0]) if b else 0
    out = []
    for i in range(n):
        row = []
        for j in range(l):
            acc = ring.zero(deg)
            for k in range(m):
                acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def _const_matrix(c: list[list], ring) -> list[list[Form]]:
    return [[ring.const(v) for v in row] for row in c]


def _square_is_zero(l: list[list[Form]], ring) -> bool:
    return all(e.is_zero() for row in _matmul_forms(l, l, ring, 2) for e in row)


def structured_L(k: int, ring, rng: Random) -> list[list[Form]]:
    """P·[[0, A], [0, 0]]·P⁻¹ with A a random block of linear forms."""
    fld = ring.field
    s = rng.randrange(0, k + 1)
    sparse = rng.random() < 0.5
    block = [
        [_linear(ring, rng, fld, sparse) if i < s <= j else ring.zero(1) for j in range(k)] for i in range(k)
    ]
    p, pinv = _constant_invertible(k, rng, fld)
    left = _matmul_forms(_const_matrix(p, ring), block, ring, 1)
    return _matmul_forms(left, _const_matrix(pinv, ring), ring, 1)


def rank_one_L(k: int, ring, rng: Random) -> list[list[Form]]:
    """u·vᵀ with u constant and v linear, v·u = 0."""
    fld = ring.field
    u = [fld.random(rng) for _ in range(k)]
    while not any(u):
        u = [fld.random(rng) for _ in range(k)]
    piv = next(i for i, c in enumerate(u) if c)
    v = [_linear(ring, rng, fld) for _ in range(k)]
    rest = sum((v[j].scale(u[j]) for j in range(k) if j != piv), ring.zero(1))
    v[piv] = -rest.scale(fld.inv(u[piv]))
    if rng.random() < 0.5:
        return [[v[j].scale(u[i]) for j in range(k)] for i in range(k)]
    return [[v[i].scale(u[j]) for j in range(k)] for i in range(k)]


def random_L(k: int, ring, rng: Random) -> list[list[Form]] | None:
    """One rejection-sampling draw: sparse general linear L, kept only if L² = 0."""
    l = [[_linear(ring, rng, ring.field, True) for _ in range(k)] for _ in range(k)]
    return l if _square_is_zero(l, ring) else None


# ---------------------------------------------------------------- normal form


def normalize(raw: list[list[Form]], ring) -> list[list[Form]]:
    """Bring a linear M = w·A + B (A invertible constant, B w-free) to w·I + L."""
    fld = ring.field
    k = len(raw)
    w_idx = ring.variables.index("w")
    a = [[e.terms.get(tuple(1 if i == w_idx else 0 for i in range(4)), fld.zero) for e in row] for row in raw]
    inv = _inverse(a, fld)
    prod = _matmul_forms(_const_matrix(inv, ring), raw, ring, 1)
    out = []
    for i in range(k):
        row = []
        for j in range(k):
            e = prod[i][j]
            terms = {m: c for m, c in e.terms.items() if not m[w_idx]}
            wpart = {m: c for m, c in e.terms.items() if m[w_idx]}
            expect = {(0, 0, 0, 1): fld.one} if i == j else {}
            if wpart != expect:
                raise ValidationFailed("normalized matrix is not w·I + L")
            row.append(Form.from_terms(ring, 1, terms))
        out.append(row)
    return out


def _inverse(a: list[list], fld: Field) -> list[list]:
    k = len(a)
    aug = [row[:] + [fld.one if i == j else fld.zero for j in range(k)] for i, row in enumerate(a)]
    for c in range(k):
        piv = next((r for r in range(c, k) if aug[r][c]), None)
        if piv is None:
            raise ValidationFailed("w-part of M is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = fld.inv(aug[c][c])
        aug[c] = [fld(v * inv) for v in aug[c]]
        for r in range(k):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [fld(x - f * y) for x, y in zip(aug[r], aug[c])]
    return [row[k:] for row in aug]


def mf_from_L(l: list[list[Form]], ambient) -> SheafHandle:
    ring = ambient.ring
    k = len(l)
    w = ring.var("w")
    rows = [[(w if i == j else ring.zero(1)) + l[i][j] for j in range(k)] for i in range(k)]
    m = GradedMatrix(ambient, [-1] * k, [0] * k, rows)
    n = complete_factorization(m, ambient.f).N
    partner = [[(w if i == j else ring.zero(1)) - l[i][j] for j in range(k)] for i in range(k)]
    if any(n.entries[i][j] != partner[i][j] for i in range(k) for j in range(k)):
        raise ValidationFailed("partner differs from w·I - L")
    return sheaf_from_matrix(m, f"coker(wI+L)[{k}]", "explorer")


# ---------------------------------------------------------------- classification


def _oh_quotient(e: SheafHandle, rng: Random) -> bool:
    oh = _oh(e)
    hom = hom_basis(e, oh)
    if hom.dim == 0:
        return False
    fld = e.ambient.field
    for _ in range(4):
        u = hom.combination([fld.random(rng) for _ in range(hom.dim)])
        if _surjective(u.beta, oh):
            return True
    return False


def _oh(e: SheafHandle) -> SheafHandle:
    ring = e.ambient.ring
    m = GradedMatrix(e.ambient, [-1], [0], [[ring.var("w")]])
    return sheaf_from_matrix(m, "O_H", "")


def _layered(e: SheafHandle, rng: Random) -> bool:
    """Greedy filtration: peel off images of O_H -> E until nothing is left."""
    fld = e.ambient.field
    cur = e
    while cur.M.nrows:
        hom = hom_basis(_oh(cur), cur)
        if hom.dim == 0:
            return False
        u = hom.combination([fld.random(rng) for _ in range(hom.dim)])
        col = GradedMatrix(cur.ambient, [0], cur.M.target_degrees, u.beta.entries)
        m = minimalize(cur.M.hstack(col))
        if m.nrows != cur.M.nrows - 1:
            return False
        if m.nrows == 0:
            return True
        try:
            complete_factorization(m, cur.ambient.f)
        except (NotAnnihilated, DegreeMismatch):
            return False
        cur = sheaf_from_matrix(m, "quotient", "")
    return True


def classify(l: list[list[Form]], ambient, seed: int, source: str) -> SampleRecord:
    rng = Random(seed)
    e = mf_from_L(l, ambient)
    pieces = decompose(e)
    return SampleRecord(
        seed=seed,
        size=len(l),
        L=[[format_form(x) for x in row] for row in l],
        source=source,
        rank=_rank(e),
        h0=[cohomology(e, 0, t) for t in H0_WINDOW],
        decomposition=sorted(str(hilbert_polynomial(s)) for s in pieces),
        has_OH_quotient=_oh_quotient(e, rng),
        layered_witness=_layered(e, rng),
        ulrich=is_ulrich(e),
    )


def _rank(e: SheafHandle) -> str:
    from .cohomology import rank

    return str(rank(e))


# ---------------------------------------------------------------- sampling


def sample(size: int, p: int = 101, count: int = 10, seed: int = 7, max_tries: int = 50) -> Iterator[tuple[SampleRecord | None, int]]:
    """Yields (record, rejections spent on it); record is None when the draw budget ran out."""
    if not 1 <= size <= 4:
        raise ValidationFailed("size must lie in 1..4")
    if p <= 50:
        raise ValidationFailed("p must exceed 50")
    fld = GF(p)
    amb = double_plane(fld)
    ring = amb.ring
    master = Random(seed)
    for _ in range(count):
        s = master.randrange(2**31)
        rng = Random(s)
        rejected = 0
        kind = rng.randrange(3)
        if kind == 0:
            l, source = structured_L(size, ring, rng), "block"
        elif kind == 1:
            l, source = rank_one_L(size, ring, rng), "rank-one"
        else:
            l, source = None, "rejection"
            while l is None and rejected < max_tries:
                l = random_L(size, ring, rng)
                if l is None:
                    rejected += 1
            if l is None:
                yield None, rejected
                continue
        # raw route: hide the normal form behind a constant change of basis
        q, _ = _constant_invertible(size, rng, fld)
        w = ring.var("w")
        m = [[(w if i == j else ring.zero(1)) + l[i][j] for j in range(size)] for i in range(size)]
        raw = _matmul_forms(_const_matrix(q, ring), m, ring, 1)
        if normalize(raw, ring) != l:
            raise ValidationFailed("raw and normal-form routes disagree")
        yield classify(l, amb, s, source), rejected


def survey(size: int, p: int = 101, samples: int = 10, seed: int = 7) -> CensusReport:
    rep = CensusReport(size=size, p=p, samples=samples, seed=seed)
    by_source: Counter = Counter()
    types: Counter = Counter()
    for rec, rejected in sample(size, p, samples, seed):
        rep.rejected += rejected
        if rec is None:
            continue
        rep.accepted += 1
        by_source[rec.source] += 1
        types[" ⊕ ".join(rec.decomposition)] += 1
        rep.without_OH_quotient += not rec.has_OH_quotient
        rep.without_layered_witness += not rec.layered_witness
        rep.ulrich += rec.ulrich
        if not rec.has_OH_quotient and len(rec.decomposition) == 1:
            rep.non_layered_candidates.append(rec.L)
    rep.by_source = dict(sorted(by_source.items()))
    rep.decomposition_types = dict(sorted(types.items()))
    return rep
