"""Exact scalars, homogeneous forms and linear algebra on graded pieces.

Rational scalars are ``gmpy2.mpq`` values; prime-field scalars are plain
Python ints reduced into ``range(p)``.  Nothing here ever touches floats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from random import Random
from typing import Any, Iterable, Sequence

import gmpy2
from gmpy2 import mpq

from .errors import DegreeMismatch, MfsheafError, ParseError

Exponent = tuple[int, ...]
Vector = dict[int, Any]


# ---------------------------------------------------------------- fields


class Field:
    """The rationals (``p is None``) or the prime field F_p."""

    __slots__ = ("p",)

    def __init__(self, p: int | None = None) -> None:
        if p is not None and (p < 2 or not gmpy2.is_prime(p)):
            raise ValueError(f"{p} is not prime")
        self.p = p

    @property
    def characteristic(self) -> int:
        return self.p or 0

    def __call__(self, x: Any) -> Any:
        if self.p is None:
            return mpq(x)
        if isinstance(x, int):
            return x % self.p
        q = mpq(x)
        num, den = int(q.numerator), int(q.denominator)
        if den % self.p == 0:
            raise ZeroDivisionError(f"denominator {den} vanishes in F_{self.p}")
        return num * pow(den, -1, self.p) % self.p

    @property
    def zero(self) -> Any:
        return self(0)

    @property
    def one(self) -> Any:
        return self(1)

    def inv(self, x: Any) -> Any:
        if not x:
            raise ZeroDivisionError("division by zero in exact field")
        if self.p is None:
            return 1 / mpq(x)
        return pow(x, -1, self.p)

    def random(self, rng: Random, bound: int = 20) -> Any:
        if self.p is None:
            return mpq(rng.randint(-bound, bound))
        return rng.randrange(self.p)

    def to_json(self) -> Any:
        return "Q" if self.p is None else {"Fp": self.p}

    @classmethod
    def from_json(cls, data: Any) -> "Field":
        if data == "Q":
            return QQ
        if isinstance(data, dict) and "Fp" in data:
            return cls(int(data["Fp"]))
        raise ParseError("unknown field tag", str(data))

    def format_scalar(self, c: Any) -> str:
        if self.p is not None:
            return str(int(c))
        c = mpq(c)
        if c.denominator == 1:
            return str(int(c.numerator))
        return f"{int(c.numerator)}/{int(c.denominator)}"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("Field", self.p))

    def __repr__(self) -> str:
        return "QQ" if self.p is None else f"GF({self.p})"


QQ = Field()


def GF(p: int) -> Field:
    return Field(p)


# ---------------------------------------------------------------- monomials


@lru_cache(maxsize=None)
def _basis(num_vars: int, d: int) -> tuple[Exponent, ...]:
    if d < 0:
        return ()
    if num_vars == 1:
        return ((d,),)
    out: list[Exponent] = []
    for e in range(d, -1, -1):
        out.extend((e,) + rest for rest in _basis(num_vars - 1, d - e))
    return tuple(out)


def monomial_basis(num_vars: int, d: int) -> list[Exponent]:
    """Exponent vectors of degree ``d`` in graded-lex order (largest first)."""
    if num_vars < 1:
        raise ValueError("num_vars must be positive")
    return list(_basis(num_vars, d))


@lru_cache(maxsize=None)
def monomial_index(num_vars: int, d: int) -> dict[Exponent, int]:
    return {m: i for i, m in enumerate(_basis(num_vars, d))}


def piece_dim(num_vars: int, d: int) -> int:
    return comb(d + num_vars - 1, num_vars - 1) if d >= 0 else 0


# ---------------------------------------------------------------- rings and forms


@dataclass(frozen=True)
class Ring:
    variables: tuple[str, ...]
    field: Field = QQ

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def var(self, name: str) -> "Form":
        i = self.variables.index(name)
        e = tuple(1 if k == i else 0 for k in range(self.nvars))
        return Form(self, 1, {e: self.field.one})

    def gens(self) -> list["Form"]:
        return [self.var(v) for v in self.variables]

    def zero(self, degree: int) -> "Form":
        return Form(self, degree, {})

    def const(self, c: Any) -> "Form":
        c = self.field(c)
        return Form(self, 0, {(0,) * self.nvars: c} if c else {})

    def parse(self, text: str, degree: int | None = None) -> "Form":
        return parse_form(self, text, degree)

    def with_field(self, field: Field) -> "Ring":
        return Ring(self.variables, field)


P3 = Ring(("x", "y", "z", "w"))
P2 = Ring(("x", "y", "z"))


class Form:
    """Homogeneous polynomial; the zero form keeps an explicit degree."""

    __slots__ = ("ring", "degree", "terms", "_hash")

    def __init__(self, ring: Ring, degree: int, terms: dict[Exponent, Any]) -> None:
        self.ring = ring
        self.degree = degree
        self.terms = terms
        self._hash: int | None = None

    @classmethod
    def from_terms(cls, ring: Ring, degree: int, terms: dict[Exponent, Any]) -> "Form":
        f = ring.field
        clean = {}
        for e, c in terms.items():
            c = f(c)
            if c:
                if len(e) != ring.nvars or sum(e) != degree:
                    raise DegreeMismatch(f"monomial {e} is not of degree {degree}")
                clean[tuple(e)] = c
        return cls(ring, degree, clean)

    # -- basic predicates
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_unit(self) -> bool:
        return self.degree == 0 and bool(self.terms)

    def constant(self) -> Any:
        return self.terms.get((0,) * self.ring.nvars, self.ring.field.zero)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        if self.ring != other.ring or self.terms != other.terms:
            return False
        return self.degree == other.degree or not self.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    # -- arithmetic
    def _check(self, other: "Form") -> None:
        if other.ring != self.ring:
            raise MfsheafError("forms live in different rings")
        if other.degree != self.degree and self.terms and other.terms:
            raise DegreeMismatch(f"cannot add degrees {self.degree} and {other.degree}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        p = self.ring.field.p
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if p:
                v %= p
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Form(self.ring, self.degree, out)

    def __neg__(self) -> "Form":
        p = self.ring.field.p
        if p:
            return Form(self.ring, self.degree, {e: (-c) % p for e, c in self.terms.items()})
        return Form(self.ring, self.degree, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c: Any) -> "Form":
        c = self.ring.field(c)
        if not c:
            return Form(self.ring, self.degree, {})
        p = self.ring.field.p
        if p:
            return Form(self.ring, self.degree, {e: v * c % p for e, v in self.terms.items()})
        return Form(self.ring, self.degree, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other: Any) -> "Form":
        if not isinstance(other, Form):
            return self.scale(other)
        if other.ring != self.ring:
            raise MfsheafError("forms live in different rings")
        deg = self.degree + other.degree
        if not self.terms or not other.terms:
            return Form(self.ring, deg, {})
        p = self.ring.field.p
        out: dict[Exponent, Any] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        if p:
            out = {e: c % p for e, c in out.items() if c % p}
        else:
            out = {e: c for e, c in out.items() if c}
        return Form(self.ring, deg, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Form":
        out = self.ring.const(1)
        for _ in range(n):
            out = out * self
        return out

    def exact_div(self, other: "Form") -> "Form":
        """Quotient of an exact division; raises if ``other`` does not divide."""
        if not other.terms:
            raise ZeroDivisionError("division by the zero form")
        deg = self.degree - other.degree
        field = self.ring.field
        lead = max(other.terms)
        inv_lead = field.inv(other.terms[lead])
        rem = dict(self.terms)
        quot: dict[Exponent, Any] = {}
        p = field.p
        while rem:
            m = max(rem)
            shift = tuple(a - b for a, b in zip(m, lead))
            if min(shift) < 0:
                raise MfsheafError("division is not exact")
            c = rem[m] * inv_lead
            if p:
                c %= p
            quot[shift] = c
            for e, v in other.terms.items():
                t = tuple(a + b for a, b in zip(e, shift))
                nv = rem.get(t, 0) - c * v
                if p:
                    nv %= p
                if nv:
                    rem[t] = nv
                else:
                    rem.pop(t, None)
        return Form(self.ring, deg, quot)

    def evaluate(self, point: Sequence[Any]) -> Any:
        field = self.ring.field
        total = field.zero
        for e, c in self.terms.items():
            term = c
            for xi, k in zip(point, e):
                if k:
                    term = term * field(xi) ** k
            total += term
        return field(total)

    def substitute(self, images: Sequence["Form"], target: Ring) -> "Form":
        """Replace the i-th variable by the linear form ``images[i]``."""
        out = target.zero(self.degree)
        for e, c in self.terms.items():
            term = target.const(c)
            for img, k in zip(images, e):
                for _ in range(k):
                    term = term * img
            out = out + term
        if out.is_zero():
            return target.zero(self.degree)
        return out

    def coefficient_vector(self) -> Vector:
        idx = monomial_index(self.ring.nvars, self.degree)
        return {idx[e]: c for e, c in self.terms.items()}

    def map_coefficients(self, ring: Ring) -> "Form":
        return Form.from_terms(ring, self.degree, self.terms)

    def __str__(self) -> str:
        return format_form(self)

    def __repr__(self) -> str:
        return f"Form({format_form(self)!r}, deg={self.degree})"


def random_form(ring: Ring, d: int, rng: Random, bound: int = 20) -> Form:
    terms = {e: ring.field.random(rng, bound) for e in monomial_basis(ring.nvars, d)}
    return Form.from_terms(ring, d, terms)


# ---------------------------------------------------------------- text format


def format_form(f: Form) -> str:
    if not f.terms:
        return "0"
    field = f.ring.field
    pieces: list[str] = []
    for e in sorted(f.terms, reverse=True):
        c = f.terms[e]
        if field.p is None and c < 0:
            sign, mag = "-", -c
        else:
            sign, mag = "+", c
        mono = "*".join(
            v if k == 1 else f"{v}^{k}" for v, k in zip(f.ring.variables, e) if k
        )
        cs = field.format_scalar(mag)
        if not mono:
            body = cs
        elif cs == "1":
            body = mono
        else:
            body = f"{cs}*{mono}"
        pieces.append((sign, body))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\^)|(\*)|([+-]))")


def parse_form(ring: Ring, text: str, degree: int | None = None) -> Form:
    """Parse ``3*x^2*w - y*z`` style text; ``degree`` annotates the zero form."""
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        m = _TOKEN.match(stripped, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", text, 1, pos + 1)
        kind = ["num", "var", "pow", "mul", "sign"][m.lastindex - 1]
        tokens.append((kind, m.group(m.lastindex), m.start(m.lastindex) + 1))
        pos = m.end()
    if not tokens:
        raise ParseError("empty polynomial", text, 1, 1)

    field = ring.field
    terms: dict[Exponent, Any] = {}
    i = 0

    def expect(kind: str) -> tuple[str, str, int]:
        nonlocal i
        if i >= len(tokens) or tokens[i][0] != kind:
            col = tokens[i][2] if i < len(tokens) else len(text) + 1
            raise ParseError(f"expected {kind}", text, 1, col)
        tok = tokens[i]
        i += 1
        return tok

    first = True
    while i < len(tokens):
        sign = 1
        if tokens[i][0] == "sign":
            sign = -1 if tokens[i][1] == "-" else 1
            i += 1
        elif not first:
            raise ParseError("expected + or -", text, 1, tokens[i][2])
        first = False
        coeff: Any = mpq(1)
        exps = [0] * ring.nvars
        factor_seen = False
        while True:
            if i < len(tokens) and tokens[i][0] == "num":
                coeff *= mpq(tokens[i][1])
                i += 1
            elif i < len(tokens) and tokens[i][0] == "var":
                name, col = tokens[i][1], tokens[i][2]
                if name not in ring.variables:
                    raise ParseError(f"unknown variable {name}", text, 1, col)
                i += 1
                k = 1
                if i < len(tokens) and tokens[i][0] == "pow":
                    i += 1
                    k = int(expect("num")[1])
                exps[ring.variables.index(name)] += k
            else:
                col = tokens[i][2] if i < len(tokens) else len(text) + 1
                raise ParseError("expected a factor", text, 1, col)
            factor_seen = True
            if i < len(tokens) and tokens[i][0] == "mul":
                i += 1
                continue
            break
        assert factor_seen
        e = tuple(exps)
        terms[e] = terms.get(e, 0) + sign * coeff
    nonzero = {e: c for e, c in terms.items() if field(c)}
    degs = {sum(e) for e in nonzero}
    if len(degs) > 1:
        raise ParseError("polynomial is not homogeneous", text, 1, 1)
    if degs:
        d = degs.pop()
        if degree is not None and d != degree:
            raise DegreeMismatch(f"{text!r} has degree {d}, expected {degree}")
    else:
        d = degree if degree is not None else 0
    return Form.from_terms(ring, d, nonzero)


# ---------------------------------------------------------------- linear algebra


class Echelon:
    """Incrementally maintained reduced row echelon basis of a subspace."""

    __slots__ = ("field", "rows")

    def __init__(self, field: Field) -> None:
        self.field = field
        self.rows: dict[int, Vector] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, v: Vector) -> Vector:
        p = self.field.p
        v = dict(v)
        for c in [c for c in v if c in self.rows]:
            a = v.get(c)
            if not a:
                continue
            for k, b in self.rows[c].items():
                nv = v.get(k, 0) - a * b
                if p:
                    nv %= p
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
        return v

    def insert(self, v: Vector) -> bool:
        r = self.reduce(v)
        if not r:
            return False
        p = self.field.p
        piv = min(r)
        inv = self.field.inv(r[piv])
        r = {k: (x * inv % p if p else x * inv) for k, x in r.items()}
        for c, row in self.rows.items():
            a = row.get(piv)
            if a:
                for k, b in r.items():
                    nv = row.get(k, 0) - a * b
                    if p:
                        nv %= p
                    if nv:
                        row[k] = nv
                    else:
                        row.pop(k, None)
        self.rows[piv] = r
        return True

    def contains(self, v: Vector) -> bool:
        return not self.reduce(v)


def rank_of(vectors: Iterable[Vector], field: Field) -> int:
    ech = Echelon(field)
    for v in vectors:
        ech.insert(v)
    return len(ech)


def kernel_of_rows(rows: Iterable[Vector], ncols: int, field: Field) -> list[Vector]:
    """Basis of {x : row . x = 0 for every row}."""
    ech = Echelon(field)
    for r in rows:
        ech.insert(r)
    p = field.p
    basis: list[Vector] = []
    pivots = ech.rows
    for f in range(ncols):
        if f in pivots:
            continue
        x: Vector = {f: field.one}
        for c, row in pivots.items():
            a = row.get(f)
            if a:
                x[c] = (-a) % p if p else -a
        basis.append(x)
    return basis


class PieceMatrix:
    """Sparse column-stored scalar matrix between graded pieces."""

    __slots__ = ("field", "nrows", "ncols", "cols")

    def __init__(self, field: Field, nrows: int, ncols: int, cols: list[Vector]) -> None:
        self.field = field
        self.nrows = nrows
        self.ncols = ncols
        self.cols = cols

    @classmethod
    def from_dense(cls, field: Field, rows: Sequence[Sequence[Any]]) -> "PieceMatrix":
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        cols = [
            {i: field(rows[i][j]) for i in range(nrows) if field(rows[i][j])} for j in range(ncols)
        ]
        return cls(field, nrows, ncols, cols)

    def rows(self) -> list[Vector]:
        out: list[Vector] = [{} for _ in range(self.nrows)]
        for j, col in enumerate(self.cols):
            for i, v in col.items():
                out[i][j] = v
        return out

    def to_dense(self) -> list[list[Any]]:
        dense = [[self.field.zero] * self.ncols for _ in range(self.nrows)]
        for j, col in enumerate(self.cols):
            for i, v in col.items():
                dense[i][j] = v
        return dense

    def rank(self) -> int:
        return rank_of(self.cols, self.field)

    def kernel(self) -> list[Vector]:
        return kernel_of_rows(self.rows(), self.ncols, self.field)

    def cokernel_dim(self) -> int:
        return self.nrows - self.rank()

    def apply(self, x: Vector) -> Vector:
        p = self.field.p
        out: Vector = {}
        for j, a in x.items():
            for i, b in self.cols[j].items():
                out[i] = out.get(i, 0) + a * b
        if p:
            return {i: v % p for i, v in out.items() if v % p}
        return {i: v for i, v in out.items() if v}

    def solve(self, b: Vector) -> Vector | None:
        """Some x with A x = b, or None when b is outside the column space."""
        rows = self.rows()
        n = self.ncols
        for i, v in b.items():
            rows[i][n] = v
        ech = Echelon(self.field)
        for r in rows:
            ech.insert(r)
        if n in ech.rows:
            return None
        return {c: row[n] for c, row in ech.rows.items() if row.get(n)}


@dataclass(frozen=True)
class LinearSummary:
    rank: int
    kernel: list[Vector]
    cokernel_dim: int


def exact_linear_algebra(a: PieceMatrix) -> LinearSummary:
    ker = a.kernel()
    rank = a.ncols - len(ker)
    return LinearSummary(rank, ker, a.nrows - rank)


# ---------------------------------------------------------------- determinants


def _cofactor_det(rows: list[list[Form]], ring: Ring, degree: int) -> Form:
    n = len(rows)
    if n == 0:
        return ring.const(1)
    if n == 1:
        return rows[0][0]
    total = ring.zero(degree)
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        sub_deg = degree - rows[0][j].degree
        term = rows[0][j] * _cofactor_det(minor, ring, sub_deg)
        total = total + (term if j % 2 == 0 else -term)
    return total if total else ring.zero(degree)


def _bareiss_det(rows: list[list[Form]], ring: Ring, degree: int) -> Form:
    a = [list(r) for r in rows]
    n = len(a)
    sign = 1
    prev = ring.const(1)
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero()), None)
            if swap is None:
                return ring.zero(degree)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[k][k] * a[i][j] - a[i][k] * a[k][j]
                a[i][j] = num.exact_div(prev) if num else ring.zero(num.degree - prev.degree)
        prev = a[k][k]
    det = a[n - 1][n - 1]
    if det.is_zero():
        return ring.zero(degree)
    return det if sign == 1 else -det


def det_poly(m: Any) -> Form:
    """Exact determinant of a square graded matrix (or list of rows of forms)."""
    rows = [list(r) for r in (m.entries if hasattr(m, "entries") else m)]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DegreeMismatch("determinant of a non-square matrix")
    if hasattr(m, "ring"):
        ring = m.ring
        degree = sum(m.target_degrees) - sum(m.source_degrees)
    else:
        ring = rows[0][0].ring
        degree = sum(rows[i][i].degree for i in range(n))
    if n < 4:
        return _cofactor_det(rows, ring, degree)
    return _bareiss_det(rows, ring, degree)


def scalar_det(rows: Sequence[Sequence[Any]], field: Field) -> Any:
    """Determinant of a scalar matrix by Gaussian elimination."""
    a = [[field(x) for x in r] for r in rows]
    n = len(a)
    det = field.one
    p = field.p
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k]), None)
        if piv is None:
            return field.zero
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det = det * a[k][k]
        inv = field.inv(a[k][k])
        for i in range(k + 1, n):
            f = a[i][k] * inv
            if f:
                for j in range(k, n):
                    a[i][j] = a[i][j] - f * a[k][j]
                    if p:
                        a[i][j] %= p
        if p:
            det %= p
    return field(det)
