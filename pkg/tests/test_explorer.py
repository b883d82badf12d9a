from random import Random

from mfsheaf import explorer as ex
from mfsheaf.algebra import GF, parse_form
from mfsheaf.catalog import double_plane
from mfsheaf.harness import archived_baseline


def test_size_one_is_oh():
    for rec, _ in ex.sample(1, 101, 8, 1):
        if rec is None:
            continue
        assert rec.L == [["0"]]
        assert rec.decomposition == ["1/2*t^2 + 3/2*t + 1"]


def test_size_two_types():
    oh2 = sorted(["1/2*t^2 + 3/2*t + 1"] * 2)
    il = ["t^2 + 3*t + 2"]
    seen = set()
    for rec, _ in ex.sample(2, 101, 30, 5):
        if rec is None:
            continue
        assert rec.decomposition in (oh2, il)
        seen.add(tuple(rec.decomposition))
        # no indecomposable non-split locally free Ulrich type at this size
        assert rec.has_OH_quotient
    assert len(seen) == 2


def test_partner_identity():
    amb = double_plane(GF(101))
    ring = amb.ring
    rng = Random(2)
    for k in (2, 3, 4):
        for draw in (ex.structured_L, ex.rank_one_L):
            l = draw(k, ring, rng)
            e = ex.mf_from_L(l, amb)
            assert e.M * e.mf.N == e.M.scaled_identity(amb.f, e.M.target_degrees, 2)


def test_normalize_agrees():
    amb = double_plane(GF(103))
    ring = amb.ring
    rng = Random(4)
    l = ex.structured_L(3, ring, rng)
    q, _ = ex._constant_invertible(3, rng, ring.field)
    w = ring.var("w")
    m = [[(w if i == j else ring.zero(1)) + l[i][j] for j in range(3)] for i in range(3)]
    raw = ex._matmul_forms(ex._const_matrix(q, ring), m, ring, 1)
    assert ex.normalize(raw, ring) == l


def test_survey_deterministic_and_totals():
    a = ex.survey(3, 101, 25, 11)
    b = ex.survey(3, 101, 25, 11)
    assert a.dumps() == b.dumps()
    assert sum(a.decomposition_types.values()) == a.accepted == sum(a.by_source.values())


def test_reclassify_is_pure():
    amb = double_plane(GF(101))
    for rec, _ in ex.sample(3, 101, 6, 9):
        if rec is None:
            continue
        l = [[parse_form(amb.ring, s, 1) for s in row] for row in rec.L]
        assert ex.classify(l, amb, rec.seed, rec.source) == rec


def test_archived_baseline():
    assert ex.survey(3, 101, 500, 7).to_json() == archived_baseline()
