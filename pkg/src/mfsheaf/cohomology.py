"""Cohomology of twists, Hilbert data, regularity and the Ulrich-type predicates."""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .errors import NotAnnihilated, DegreeMismatch, UnsupportedBacking, UnknownRule
from .presentation import SheafHandle, complete_factorization


# ---------------------------------------------------------------- twist window


def window(e: SheafHandle | None = None, pad: int = 6) -> range:
    """Twist window [-pad - D, pad + D]; MFSHEAF_WINDOW=lo:hi overrides it."""
    env = os.environ.get("MFSHEAF_WINDOW")
    if env:
        lo, hi = (int(s) for s in env.replace(",", ":").split(":"))
        return range(lo, hi + 1)
    span = 0
    if e is not None and e.presentation is not None:
        degs = e.M.source_degrees + e.M.target_degrees
        span = max((abs(d) for d in degs), default=0)
    elif e is not None:
        span = abs(e.param.get("twist", 0)) + 1
    return range(-pad - span, pad + span + 1)


# ---------------------------------------------------------------- polynomials in t


def binom_poly(m: int, n: int) -> Fraction:
    """C(m, n) read as the degree-n polynomial in m (valid for negative m)."""
    out = Fraction(1)
    for k in range(n):
        out *= m - k
    return out / factorial(n)


@dataclass(frozen=True)
class HilbertPolynomial:
    """Stored in the binomial basis: P(t) = sum c_k C(t, k)."""

    coeffs: tuple[Fraction, ...]

    @classmethod
    def from_values(cls, values: list[Fraction]) -> "HilbertPolynomial":
        diffs = [Fraction(v) for v in values]
        coeffs = []
        for _ in range(len(values)):
            coeffs.append(diffs[0])
            diffs = [b - a for a, b in zip(diffs, diffs[1:])]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        return cls(tuple(coeffs))

    def __call__(self, t: int) -> Fraction:
        return sum((c * binom_poly(t, k) for k, c in enumerate(self.coeffs)), Fraction(0))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Fraction:
        """Leading coefficient in the monomial basis."""
        if not self.coeffs:
            return Fraction(0)
        return self.coeffs[-1] / factorial(self.degree)

    def monomial_coefficients(self) -> list[Fraction]:
        """Coefficients of 1, t, t², ... obtained by exact interpolation."""
        d = max(self.degree, 0)
        pts = list(range(d + 1))
        vals = [self(t) for t in pts]
        # Solve the Vandermonde system exactly.
        rows = [[Fraction(t) ** k for k in range(d + 1)] + [v] for t, v in zip(pts, vals)]
        for c in range(d + 1):
            piv = next(r for r in range(c, d + 1) if rows[r][c] != 0)
            rows[c], rows[piv] = rows[piv], rows[c]
            rows[c] = [x / rows[c][c] for x in rows[c]]
            for r in range(d + 1):
                if r != c and rows[r][c] != 0:
                    f = rows[r][c]
                    rows[r] = [a - f * b for a, b in zip(rows[r], rows[c])]
        return [rows[k][-1] for k in range(d + 1)]

    def __str__(self) -> str:
        parts = []
        for k, c in enumerate(self.monomial_coefficients()):
            if c:
                var = "" if k == 0 else "t" if k == 1 else f"t^{k}"
                coef = f"{c}" if k == 0 or c not in (1, -1) else ("" if c == 1 else "-")
                parts.append(coef + ("*" if coef not in ("", "-") and var else "") + var)
        return " + ".join(reversed(parts)) or "0"


def _rule_hilbert_values(e: SheafHandle, ts: range) -> list[Fraction]:
    return [Fraction(sum((-1) ** i * cohomology(e, i, t) for i in range(4))) for t in ts]


def hilbert_polynomial(e: SheafHandle) -> HilbertPolynomial:
    cached = e._cache.get("hilbert_poly")
    if cached is not None:
        return cached
    if e.kind == "rule":
        poly = HilbertPolynomial.from_values(_rule_hilbert_values(e, range(0, 5)))
    else:
        n = e.ambient.dim
        m = e.M
        vals = [
            sum((binom_poly(b + t + n, n) for b in m.target_degrees), Fraction(0))
            - sum((binom_poly(a + t + n, n) for a in m.source_degrees), Fraction(0))
            for t in range(n + 2)
        ]
        poly = HilbertPolynomial.from_values(vals)
    e._cache["hilbert_poly"] = poly
    return poly


# ---------------------------------------------------------------- cohomology


def _top_dual(e: SheafHandle, t: int) -> tuple[int, int, int]:
    """(dim H^n F1(t), dim H^n F0(t), rank of the dual piece map)."""
    n = e.ambient.dim
    key = ("top", t)
    hit = e._cache.get(key)
    if hit is None:
        dual = e.M.transpose().piece(-n - 1 - t)
        hit = (dual.nrows, dual.ncols, dual.rank())
        e._cache[key] = hit
    return hit


def h0(e: SheafHandle, t: int) -> int:
    key = ("h0", t)
    hit = e._cache.get(key)
    if hit is None:
        hit = e.M.piece(t).cokernel_dim()
        e._cache[key] = hit
    return hit


def _o_x_h0(t: int) -> int:
    return comb(t + 3, 3) - comb(t + 1, 3) if t >= 0 else 0


def rules_cohomology(name: str, i: int, t: int, params: dict | None = None) -> int:
    """Closed-form cohomology for the rule-backed point sheaves on the double plane."""
    params = params or {}
    t = t + params.get("twist", 0)
    if name == "point":
        return 1 if i == 0 else 0
    if name == "point_ideal":
        if i == 0:
            return _o_x_h0(t) - 1 if t >= 0 else 0
        if i == 1:
            return 1 if t < 0 else 0
        if i == 2:
            return _o_x_h0(-2 - t)
        return 0
    raise UnknownRule(name)


def cohomology(e: SheafHandle, i: int, t: int) -> int:
    """dim H^i(E(t))."""
    if e.kind == "rule":
        return rules_cohomology(e.rule or "", i, t, e.param)
    n = e.ambient.dim
    if i == 0:
        return h0(e, t)
    if i < 0 or i > n:
        return 0
    if n < 2:
        raise UnsupportedBacking("ambient dimension below 2")
    # 0 -> F1 -> F0 -> E -> 0 with F_i split: only H^0 and the top H^n of
    # line bundles survive, so E has h^0, h^{n-1} and h^n only.
    if i == n - 1:
        rows, _, rank = _top_dual(e, t)
        return rows - rank
    if i == n:
        _, cols, rank = _top_dual(e, t)
        return cols - rank
    return 0


def euler_characteristic(e: SheafHandle, t: int) -> int:
    return sum((-1) ** i * cohomology(e, i, t) for i in range(e.ambient.dim + 1 if e.kind != "rule" else 4))


# ---------------------------------------------------------------- Hilbert data


@dataclass(frozen=True)
class HilbertData:
    polynomial: HilbertPolynomial
    multiplicity: Fraction
    rank: Fraction
    support_dim: int
    h0_table: dict[int, int]
    h2_table: dict[int, int]


def _mu_ambient(e: SheafHandle) -> int:
    f = e.ambient.f
    return f.degree if f is not None else 1


def rank(e: SheafHandle) -> Fraction:
    poly = hilbert_polynomial(e)
    full = e.ambient.dim - (1 if e.ambient.f is not None else 0)
    if e.kind == "rule":
        full = 2
    if poly.degree < full:
        return Fraction(0)
    mu = poly.leading * factorial(poly.degree)
    return mu / _mu_ambient(e)


def hilbert(e: SheafHandle, ts: range | None = None) -> HilbertData:
    poly = hilbert_polynomial(e)
    ts = ts if ts is not None else window(e)
    mu = poly.leading * factorial(max(poly.degree, 0))
    r = rank(e)
    if e.mf is not None:
        direct = Fraction(e.M.det_degree, e.mf.f.degree)
        if direct != r:
            raise DegreeMismatch(f"rank mismatch: {direct} from degrees, {r} from multiplicity")
    top = 2 if e.kind == "rule" else e.ambient.dim - 1
    return HilbertData(
        polynomial=poly,
        multiplicity=mu,
        rank=r,
        support_dim=poly.degree,
        h0_table={t: cohomology(e, 0, t) for t in ts},
        h2_table={t: cohomology(e, top, t) for t in ts},
    )


# ---------------------------------------------------------------- regularity


@dataclass(frozen=True)
class RegularityReport:
    regularity: int
    minimally_regular_twist: int
    ind: int
    initialized: bool


def is_regular(e: SheafHandle, r: int) -> bool:
    top = 3 if e.kind == "rule" else e.ambient.dim
    return all(cohomology(e, i, r - i) == 0 for i in range(1, top + 1))


def regularity_scan(e: SheafHandle) -> RegularityReport:
    ts = window(e)
    hi = ts[-1]
    if not is_regular(e, hi):
        raise UnsupportedBacking(f"{e.name} is not regular inside the window")
    r = hi
    while r - 1 >= ts[0] and is_regular(e, r - 1):
        r -= 1
    return RegularityReport(
        regularity=r,
        minimally_regular_twist=r,
        ind=ind(e),
        initialized=is_initialized(e),
    )


def ind(e: SheafHandle) -> int:
    """Largest t with h^0(E(-t)) != 0."""
    start = max(e.M.target_degrees) if e.presentation is not None else window(e)[-1]
    lo = window(e)[0]
    t = start
    while t >= lo - start:
        if cohomology(e, 0, -t) != 0:
            return t
        t -= 1
    raise UnsupportedBacking(f"{e.name} has no sections in the window")


# ---------------------------------------------------------------- predicates


def is_acm(e: SheafHandle) -> bool:
    if e.mf is not None:
        return e.M.nrows > 0
    full = 2 if e.kind == "rule" else e.ambient.dim - (1 if e.ambient.f is not None else 0)
    return all(
        cohomology(e, i, t) == 0 for i in range(1, full) for t in window(e)
    )


def is_initialized(e: SheafHandle) -> bool:
    return cohomology(e, 0, -1) == 0 < cohomology(e, 0, 0)


def degree_of_x(e: SheafHandle) -> int:
    return e.ambient.f.degree if e.ambient.f is not None else 1


def is_ulrich(e: SheafHandle) -> bool:
    return (
        is_initialized(e)
        and is_acm(e)
        and cohomology(e, 0, 0) == degree_of_x(e) * rank(e)
    )


def is_x_sheaf(e: SheafHandle, m: int = 2) -> bool:
    """Whether w^m kills the cokernel (complete_factorization succeeds for f = w^m)."""
    if e.presentation is None:
        return False
    ring = e.M.ring
    w = ring.var("w") if "w" in ring.variables else ring.gens()[-1]
    try:
        complete_factorization(e.M, w**m)
    except (NotAnnihilated, DegreeMismatch):
        return False
    return True


@dataclass(frozen=True)
class Predicates:
    is_acm: bool
    is_initialized: bool
    is_ulrich: bool
    is_x_sheaf: bool


def predicates(e: SheafHandle, m: int = 2) -> Predicates:
    return Predicates(is_acm(e), is_initialized(e), is_ulrich(e), is_x_sheaf(e, m))
