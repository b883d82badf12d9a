import json

import pytest
from click.testing import CliRunner

from mfsheaf import harness
from mfsheaf.cli import main
from mfsheaf.errors import UnknownCheckId


def test_registry_ids_unique_with_anchor():
    assert len(harness.CHECKS) == len({c.anchor + c.id for c in harness.CHECKS.values()})
    assert all(c.anchor for c in harness.CHECKS.values())


def test_verify_examples():
    rep = harness.verify(["lemma-ttt", "prop-ggg"], 7)
    assert rep.outcomes["lemma-ttt"].status == "PASS"
    assert len(rep.outcomes["lemma-ttt"].got) == 15
    assert rep.outcomes["prop-ggg"].got == {1: 2, 2: 4, 3: 7, 4: 11}
    with pytest.raises(UnknownCheckId):
        harness.verify(["nope"])


def test_report_checks_never_gate():
    rep = harness.verify(["open-aprop3", "open-s3"], 7)
    assert {o.status for o in rep.outcomes.values()} == {"REPORT"}


def test_cli_verify_exit_codes():
    r = CliRunner().invoke(main, ["verify", "--check", "lemma-ttt", "--format", "json"])
    assert r.exit_code == 0
    assert json.loads(r.output)["checks"]["lemma-ttt"]["status"] == "PASS"
    r = CliRunner().invoke(main, ["verify", "--check", "nope"])
    assert r.exit_code != 0


def test_cli_compute_and_catalog(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["compute", "hom", "--sheaf", "o_H", "--other", "line_ideal"])
    assert r.exit_code == 0 and json.loads(r.output)["dim"] == 1
    r = runner.invoke(main, ["compute", "ext1x", "--sheaf", "o_H", "--other", "o_H"])
    assert json.loads(r.output)["dim"] == 3
    r = runner.invoke(main, ["compute", "extp3", "--sheaf", "o_H", "--other", "o_Xnm", "--other-param", "m=2"])
    assert json.loads(r.output)["ext1"] == 3
    out = tmp_path / "ic.json"
    r = runner.invoke(main, ["catalog", "emit", "ideal_curve", "--param", "d=3", "--out", str(out)])
    assert r.exit_code == 0
    r = runner.invoke(main, ["compute", "end", "--sheaf", str(out)])
    assert json.loads(r.output)["dim"] == 7
    r = runner.invoke(main, ["compute", "kerw", "--sheaf", "o_X"])
    assert json.loads(r.output)["twists"] == [-1]
    r = runner.invoke(main, ["catalog", "list"])
    assert "spinor_restriction" in r.output
    r = runner.invoke(main, ["explore", "--size", "2", "--samples", "5"])
    assert json.loads(r.output)["accepted"] + 0 <= 5


def test_cli_window_env():
    r = CliRunner(env={"MFSHEAF_WINDOW": "0:2"}).invoke(main, ["compute", "restrict", "--sheaf", "o_X"])
    assert sorted(json.loads(r.output)["hilbert_function"]) == ["0", "1", "2"]


def test_roundtrip_check():
    assert harness.verify(["io-roundtrip"]).outcomes["io-roundtrip"].status == "PASS"
