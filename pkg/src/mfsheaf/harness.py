"""Registry of verification checks keyed by result label, plus the report format."""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from math import comb
from random import Random
from typing import Any, Callable, Iterable

from . import catalog as cat
from .algebra import GF, parse_form
from .cohomology import (
    cohomology,
    hilbert_polynomial,
    is_acm,
    is_initialized,
    is_ulrich,
    rank,
    window,
)
from .errors import Inconclusive, MfsheafError, UnknownCheckId
from .explorer import mf_from_L, sample, survey
from .homalg import (
    decompose,
    end_algebra,
    ext1_oh_point_ideal,
    ext1_X,
    ext_p3,
    hom_basis,
    hom_dim,
    isomorphism_test,
    kernel_of_w,
    restrict_to_H,
    _surjective,
)
from .presentation import SheafHandle, direct_sum, dumps, extension_block, io_roundtrip, twist

PASS, FAIL, REPORT = "PASS", "FAIL", "REPORT"


@dataclass(frozen=True)
class Outcome:
    status: str
    expected: Any = None
    got: Any = None
    data: Any = None


@dataclass(frozen=True)
class Check:
    id: str
    description: str
    anchor: str
    run: Callable[[int], Outcome]

    @property
    def gating(self) -> bool:
        return not self.id.startswith(("explore", "open"))


@dataclass
class Report:
    seed: int
    outcomes: dict[str, Outcome]
    runtimes: dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> list[str]:
        return [k for k, o in self.outcomes.items() if o.status == FAIL]

    def to_json(self) -> dict:
        return {
            "environment": environment_hash(),
            "seed": self.seed,
            "checks": {
                k: {"status": o.status, "expected": plain(o.expected), "got": plain(o.got), "data": plain(o.data)}
                for k, o in sorted(self.outcomes.items())
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def text(self) -> str:
        lines = []
        for k, o in sorted(self.outcomes.items()):
            extra = "" if o.status != FAIL else f"  expected={plain(o.expected)} got={plain(o.got)}"
            lines.append(f"{o.status:6} {k}  ({self.runtimes.get(k, 0):.2f}s){extra}")
        lines.append(f"{len(self.failed)} failing of {len(self.outcomes)}")
        return "\n".join(lines) + "\n"


def plain(x: Any) -> Any:
    """JSON-ready copy: fractions become strings, tuples lists, keys strings."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    return str(x)


def environment_hash() -> str:
    from importlib.metadata import version

    key = f"python {platform.python_version_tuple()[:2]} artifact {version('artifact')}"
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def _compare(expected: Any, got: Any, data: Any = None) -> Outcome:
    return Outcome(PASS if expected == got else FAIL, expected, got, data)


# ---------------------------------------------------------------- grids


def ttt_grid() -> tuple[dict, dict]:
    exp, got = {}, {}
    for m in (1, 2, 3):
        target = cat.o_Xnm(2, m)
        for a in range(-3, 2):
            exp[f"m={m},a={a}"] = comb(3 - a, 2)
            got[f"m={m},a={a}"] = ext_p3(1, cat.o_H(a), target)
    return exp, got


def tty_grid(seed: int) -> tuple[dict, dict]:
    exp, got = {}, {}
    for d in range(1, 5):
        ic = cat.ideal_curve(cat.random_plane_form(d, seed + d))
        for a in range(-3, 2):
            exp[f"d={d},a={a}"] = comb(2 - a, 2) + max(2 - a - d, 0)
            got[f"d={d},a={a}"] = ext_p3(1, cat.o_H(a), ic)
    return exp, got


def ggg_dims(seed: int) -> tuple[dict, dict]:
    exp = {d: 1 + comb(d + 1, 2) for d in range(1, 5)}
    got = {d: end_algebra(cat.ideal_curve(cat.random_plane_form(d, seed + d))).dim for d in range(1, 5)}
    return exp, got


# ---------------------------------------------------------------- the point construction


def aprop3_core(seed: int) -> tuple[dict, dict]:
    ep = cat.nonlayered_ulrich((0, 0, 1, 0))
    eq = cat.nonlayered_ulrich((1, 1, 1, 0))
    iso: Any
    try:
        iso = isomorphism_test(ep, eq, seed).isomorphic
    except Inconclusive:
        iso = "inconclusive"
    exp = {
        "rank": Fraction(3, 2),
        "h0": 3,
        "h0(-1)": 0,
        "mf_certified_acm": True,
        "ulrich": True,
        "verdict": "indecomposable",
        "ext1_X(I_p(1), O_H(-1))": 1,
        "iso(E_p, E_q)": True,
    }
    got = {
        "rank": rank(ep),
        "h0": cohomology(ep, 0, 0),
        "h0(-1)": cohomology(ep, 0, -1),
        "mf_certified_acm": ep.mf is not None and is_acm(ep),
        "ulrich": is_ulrich(ep),
        "verdict": end_algebra(ep).verdict,
        # Serre duality on X turns this into ext^1_X(O_H, I_p)
        "ext1_X(I_p(1), O_H(-1))": ext1_oh_point_ideal(cat.o_H(), cat.o_X(), (0, 0, 1, 0)),
        "iso(E_p, E_q)": iso,
    }
    return exp, got


def aprop3_open(seed: int) -> dict:
    """hom_X(E, O_H), surjectivity of a general element, minimal shape."""
    ep = cat.nonlayered_ulrich()
    oh = cat.o_H()
    hom = hom_basis(ep, oh)
    rng = Random(seed)
    fld = ep.ambient.field
    surj = False
    if hom.dim:
        u = hom.combination([fld.random(rng) for _ in range(hom.dim)])
        surj = _surjective(u.beta, oh)
    return {
        "hom_X(E, O_H)": hom.dim,
        "hom_X(O_H, E)": hom_dim(oh, ep),
        "general_map_surjective": surj,
        "minimal_shape": [ep.M.nrows, ep.M.ncols],
        "presentation": [[str(x) for x in row] for row in ep.M.entries],
    }


# ---------------------------------------------------------------- spinor, towers


def qwe_core() -> tuple[dict, dict]:
    s = cat.spinor_restriction()
    alg = end_algebra(s)
    exp = {"rank": 4, "h0": 0, "h0(1)": 8, "S(1) ulrich": True, "4<=dim End<=9": True, "verdict": "indecomposable"}
    got = {
        "rank": rank(s),
        "h0": cohomology(s, 0, 0),
        "h0(1)": cohomology(s, 0, 1),
        "S(1) ulrich": is_ulrich(twist(s, 1)),
        "4<=dim End<=9": 4 <= alg.dim <= 9,
        "verdict": alg.verdict,
    }
    return exp, got


def tower_core(seed: int) -> tuple[dict, dict]:
    exp, got = {}, {}
    oh = cat.o_H()
    for k in range(2, 7):
        e = cat.tower(k, seed)
        exp[f"E_{k}"] = {"ulrich": True, "hom(O_H, E)": 1, "verdict": "indecomposable"}
        got[f"E_{k}"] = {"ulrich": is_ulrich(e), "hom(O_H, E)": hom_dim(oh, e), "verdict": end_algebra(e).verdict}
    e2 = cat.tower(2, seed)
    line = cat.line_ideal(ell=e2.M.entries[0][1])
    exp["E_2 ~ I_L(1)"] = True
    got["E_2 ~ I_L(1)"] = isomorphism_test(e2, line, seed).isomorphic
    return exp, got


def verywild_core(seed: int) -> tuple[dict, dict]:
    curves = [cat.ideal_curve(cat.random_plane_form(2, seed * 100 + i)) for i in range(5)]
    exp, got = {}, {}
    for i in range(5):
        for j in range(i + 1, 5):
            try:
                v: Any = isomorphism_test(curves[i], curves[j], seed).isomorphic
            except Inconclusive:
                v = "inconclusive"
            exp[f"{i}~{j}"] = False
            got[f"{i}~{j}"] = v
    return exp, got


def aaa1_examples() -> dict[str, SheafHandle]:
    ring = cat.p3()
    x, y, _, _ = ring.gens()
    oh = cat.o_H()
    return {
        "O_H^3": direct_sum(direct_sum(oh, oh), oh),
        "O_H + I_L(1)": direct_sum(oh, cat.line_ideal()),
        "ext(O_H by O_H^2)": cat.extension_of_oh([x, y]),
        "unique filtration (E_3)": cat.tower(3),
    }


def aaa1_table() -> tuple[dict, dict]:
    oh = cat.o_H()
    want = [(3, 3), (2, 2), (2, 1), (1, 1)]
    exp, got = {}, {}
    for (name, e), pair in zip(aaa1_examples().items(), want):
        exp[name] = list(pair)
        got[name] = [hom_dim(oh, e), hom_dim(e, oh)]
    return exp, got


def iii0_core(seed: int) -> tuple[dict, dict]:
    e = cat.family_sheaf(2, 0, 2, seed=seed)
    ring = cat.p3()
    zero = cat.family_sheaf(2, 0, 2, lam=[ring.zero(3)] * 3)
    exp = {"rank": 2, "verdict": "indecomposable", "summands(lambda=0)": 4}
    got = {"rank": rank(e), "verdict": end_algebra(e).verdict, "summands(lambda=0)": len(decompose(zero))}
    return exp, got


# ---------------------------------------------------------------- property suites


SERRE_TWISTS = range(-4, 2)
TWIST_SPAN = range(-3, 3)


def property_violations(e: SheafHandle, documented: cat.CatalogEntry | None = None) -> list[str]:
    bad: list[str] = []
    top = 3 if e.kind == "rule" else e.ambient.dim
    poly = hilbert_polynomial(e)
    for t in window(e):
        chi = sum((-1) ** i * cohomology(e, i, t) for i in range(top + 1))
        if chi != poly(t):
            bad.append(f"{e.name}: chi({t}) = {chi} but P({t}) = {poly(t)}")
    shifted = twist(e, 1)
    for t in TWIST_SPAN:
        for i in range(top + 1):
            if cohomology(shifted, i, t) != cohomology(e, i, t + 1):
                bad.append(f"{e.name}: h^{i} not twist-equivariant at {t}")
    if e.mf is not None:
        mf = e.mf
        f = mf.f
        if mf.M * mf.N != mf.M.scaled_identity(f, mf.M.target_degrees, f.degree):
            bad.append(f"{e.name}: M·N != f·I")
        if mf.N * mf.M.twisted(-f.degree) != mf.N.scaled_identity(f, mf.N.target_degrees, f.degree):
            bad.append(f"{e.name}: N·M != f·I")
    on_x = e.mf is not None and e.ambient.f is not None and e.ambient.f == e.ambient.ring.var("w") ** 2
    if on_x:
        for t in SERRE_TWISTS:
            dual = hom_dim(e, cat._one_by_one(e.ambient, e.ambient.f, -2 - t, "O_X", ""))
            if cohomology(e, 2, t) != dual:
                bad.append(f"{e.name}: h^2({t}) = {cohomology(e, 2, t)} but hom(E, O_X({-2 - t})) = {dual}")
        oh = cat._one_by_one(e.ambient, e.ambient.ring.var("w"), 0, "O_H", "")
        if hom_dim(twist(e, 1), twist(oh, 1)) != hom_dim(e, oh):
            bad.append(f"{e.name}: hom not twist-equivariant")
        if rank(direct_sum(e, oh)) != rank(e) + Fraction(1, 2):
            bad.append(f"{e.name}: rank not additive under direct sum")
        ext = ext1_X(oh, e)
        if ext.dim:
            rng = Random(0)
            lift = cat.general_class(e, oh, rng)
            big = extension_block(e, oh, lift)
            if rank(big) != rank(e) + Fraction(1, 2):
                bad.append(f"{e.name}: rank not additive under extension")
    if documented is not None:
        if documented.rank is not None and rank(e) != documented.rank:
            bad.append(f"{e.name}: rank {rank(e)} != documented {documented.rank}")
        if documented.hilbert is not None:
            for t in range(-3, 6):
                if poly(t) != documented.hilbert(t):
                    bad.append(f"{e.name}: P({t}) = {poly(t)} != documented {documented.hilbert(t)}")
                    break
        if documented.acm_init_ulrich is not None:
            got = (is_acm(e), is_initialized(e), is_ulrich(e))
            if got != documented.acm_init_ulrich:
                bad.append(f"{e.name}: predicates {got} != documented {documented.acm_init_ulrich}")
    return bad


def catalog_property_violations() -> list[str]:
    bad = []
    for name in cat.catalog_names():
        entry = cat.CATALOG[name]
        bad.extend(property_violations(entry.build(), entry))
    return bad


def explorer_property_violations(seed: int, count: int = 50) -> list[str]:
    bad = []
    amb = cat.double_plane(GF(101))
    sizes = [1, 2, 3, 4]
    per = count // len(sizes)
    extra = count - per * len(sizes)
    for k in sizes:
        n = per + (1 if k <= extra else 0)
        for rec, _ in sample(k, 101, n, seed + k):
            if rec is None:
                continue
            l = [[parse_form(amb.ring, s, 1) for s in row] for row in rec.L]
            bad.extend(property_violations(mf_from_L(l, amb)))
    return bad


# ---------------------------------------------------------------- small spot checks


def rules_spot() -> tuple[dict, dict]:
    ip = cat.rule_point_ideal()
    op = cat.rule_point()
    exp = {"h1(I_p(-1))": 1, "h0(I_p(1))": 3, "h^i(O_p(t))": [1, 0, 0, 0]}
    got = {
        "h1(I_p(-1))": cohomology(ip, 1, -1),
        "h0(I_p(1))": cohomology(ip, 0, 1),
        "h^i(O_p(t))": [cohomology(op, i, 5) for i in range(4)],
    }
    return exp, got


def erra14_spot() -> tuple[dict, dict]:
    exp, got = {}, {}
    for a in (1, 2, 3):
        e = cat.rule_Epa(a=a)
        exp[f"a={a}"] = True
        got[f"a={a}"] = cohomology(e, 1, -1) > 0
    return exp, got


def hom_spot() -> tuple[dict, dict]:
    oh, il = cat.o_H(), cat.line_ideal()
    ep = cat.nonlayered_ulrich()
    exp = {"hom(O_H, I_L(1))": 1, "hom(I_L(1), O_H)": 1, "hom(O_H, O_H(1))": 3, "hom(E_p, O_X(1))": 3}
    got = {
        "hom(O_H, I_L(1))": hom_dim(oh, il),
        "hom(I_L(1), O_H)": hom_dim(il, oh),
        "hom(O_H, O_H(1))": hom_dim(oh, cat.o_H(1)),
        "hom(E_p, O_X(1))": hom_dim(ep, cat.o_X(1)),
    }
    return exp, got


def ext_spot() -> tuple[dict, dict]:
    oh, ox = cat.o_H(), cat.o_X()
    exp = {"ext1_X(O_H, O_H)": 3, "ext1_X(O_X, O_H(a)), a in window": [0] * 9}
    got = {
        "ext1_X(O_H, O_H)": ext1_X(oh, oh).dim,
        "ext1_X(O_X, O_H(a)), a in window": [ext1_X(ox, cat.o_H(a)).dim for a in range(-4, 5)],
    }
    return exp, got


def roundtrip_spot() -> tuple[dict, dict]:
    handles = [cat.ideal_curve(cat.random_plane_form(2, 7)), cat.spinor_restriction()]
    exp = {h.name: True for h in handles}
    got = {h.name: dumps(io_roundtrip(h)) == dumps(h) for h in handles}
    return exp, got


# ---------------------------------------------------------------- census


BASELINE = "census_k3_p101_n500_s7.json"


def census(seed: int, samples: int = 500) -> dict:
    rep = survey(3, 101, samples, seed).to_json()
    if seed == 7 and samples == 500:
        rep["matches_archived_baseline"] = rep == archived_baseline()
    return rep


def archived_baseline() -> dict:
    return json.loads(resources.files("mfsheaf").joinpath("data", BASELINE).read_text())


def kernel_report() -> dict:
    s = cat.spinor_restriction()
    res = kernel_of_w(s)
    if isinstance(res, list):
        return {"split_twists": res}
    return {"non_split": True, "hilbert_function": res.hilbert_function, "residual": res.residual}


def restrict_report() -> dict:
    s = cat.spinor_restriction()
    r = restrict_to_H(s, range(-1, 4))
    return {"hilbert_function_on_H": r.hilbert_function}


# ---------------------------------------------------------------- registry


def _pair(fn: Callable[..., tuple[dict, dict]], with_seed: bool = True) -> Callable[[int], Outcome]:
    def run(seed: int) -> Outcome:
        exp, got = fn(seed) if with_seed else fn()
        return _compare(exp, got)

    return run


def _report(fn: Callable[..., dict], with_seed: bool = True) -> Callable[[int], Outcome]:
    def run(seed: int) -> Outcome:
        return Outcome(REPORT, data=fn(seed) if with_seed else fn())

    return run


def _violations(fn: Callable[[int], list[str]]) -> Callable[[int], Outcome]:
    def run(seed: int) -> Outcome:
        bad = fn(seed)
        return Outcome(PASS if not bad else FAIL, 0, len(bad), bad[:20])

    return run


CHECKS: dict[str, Check] = {
    c.id: c
    for c in [
        Check("lemma-ttt", "ext^1_P3(O_H(a), O_X2[m]) = C(3-a, 2)", "Lemma ttt", _pair(lambda s: ttt_grid())),
        Check("lemma-tty", "ext^1_P3(O_H(a), I_C) = C(2-a, 2) + max(2-a-d, 0)", "Lemma tty", _pair(tty_grid)),
        Check("prop-ggg", "dim End(I_C) = 1 + C(d+1, 2)", "Prop ggg", _pair(ggg_dims)),
        Check("prop-aprop3", "the point construction: rank 3/2 Ulrich, indecomposable", "Prop aprop3", _pair(aprop3_core)),
        Check("open-aprop3", "maps from the point construction onto O_H", "Prop aprop3 Claim 2", _report(aprop3_open)),
        Check("example-qwe", "restricted spinor bundle", "Example qwe", _pair(lambda s: qwe_core())),
        Check("thm-tthhmm", "layered towers E_2..E_6", "Thm tthhmm", _pair(tower_core)),
        Check("prop-verywild", "five conics give pairwise non-isomorphic I_C", "Prop verywild", _pair(verywild_core)),
        Check("lemma-aaa1", "(e_L, e_R) table", "Lemma aaa1", _pair(lambda s: aaa1_table())),
        Check("prop-iii0", "extension family at (r, k, m) = (2, 2, 0)", "Prop iii0", _pair(iii0_core)),
        Check("props-catalog", "property suite over the catalog", "properties", _violations(lambda s: catalog_property_violations())),
        Check("props-explorer", "property suite over 50 explorer samples", "properties", _violations(explorer_property_violations)),
        Check("rules-point", "closed forms for I_p and O_p", "Thm aprop2", _pair(lambda s: rules_spot())),
        Check("lemma-erra14", "h^1(E_{p,a}(-1)) > 0 for a > 0", "Lemma erra14", _pair(lambda s: erra14_spot())),
        Check("hom-examples", "small Hom dimensions", "Lemma aaa1 preamble", _pair(lambda s: hom_spot())),
        Check("remark-aaaa1", "Ext^1_X examples", "Remark aaaa1", _pair(lambda s: ext_spot())),
        Check("io-roundtrip", "emit then parse is the identity", "serialization", _pair(lambda s: roundtrip_spot())),
        Check("open-s3", "kernel of w on the spinor restriction", "Remark s+3", _report(lambda s: kernel_report())),
        Check("open-restrict", "restriction of the spinor sheaf to H", "Lemma g1", _report(lambda s: restrict_report())),
        Check("explore-3", "census of 3x3 linear factorizations", "Thm iii", _report(census)),
    ]
}


def select(ids: Iterable[str] | None) -> list[Check]:
    if ids is None:
        return list(CHECKS.values())
    out = []
    for i in ids:
        if i not in CHECKS:
            raise UnknownCheckId(i)
        out.append(CHECKS[i])
    return out


def verify(ids: Iterable[str] | None = None, seed: int = 7) -> Report:
    rep = Report(seed=seed, outcomes={})
    for check in select(ids):
        start = time.perf_counter()
        try:
            out = check.run(seed)
        except MfsheafError as exc:
            out = Outcome(FAIL, "no error", f"{type(exc).__name__}: {exc}")
        if not check.gating and out.status != REPORT:
            out = Outcome(REPORT, data={"status": out.status, "got": out.got, "data": out.data})
        rep.outcomes[check.id] = out
        rep.runtimes[check.id] = time.perf_counter() - start
    return rep
