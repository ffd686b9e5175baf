import json
import shutil

import pytest

from diffmod import cli
from diffmod.corpus import corpus_dir, run_case, run_corpus


def corpus_path(name):
    return str(corpus_dir() / f"{name}.dms")


def run_json(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def strip_timing(report):
    report = dict(report)
    report.pop("elapsed_ms", None)
    return report


def test_cc_command(capsys):
    code, report = run_json(capsys, ["cc", corpus_path("unexpected_cc_pair")])
    assert code == 0
    assert report["schema"] == 1
    assert report["payload"]["cc"]["row_strings"] == ["d22(v) - d12(u) + u"]
    assert report["payload"]["composition_zero"]


def test_complete_command_boards(capsys):
    code, report = run_json(capsys, [
        "complete", corpus_path("unimodular_oneform"), "--order-vars", "2,3,1"])
    assert code == 0
    board = report["payload"]["board"]
    assert len(board) == 6
    assert report["payload"]["involutive"]


def test_rank_and_adjoint(capsys):
    code, report = run_json(capsys, ["rank", corpus_path("contact_pfaffian")])
    assert code == 0
    assert report["payload"] == {"rank": 2, "adjoint_rank": 2, "equal": True}
    code, report = run_json(capsys, ["adjoint", corpus_path("single_input_ode")])
    assert code == 0
    assert report["payload"]["involution_check"]


def test_ext_command_with_assumption(capsys):
    code, report = run_json(capsys, [
        "ext", corpus_path("oneform_area_lie"), "--i", "1",
        "--assume", "c!=0"])
    assert code == 0
    payload = report["payload"]
    assert payload["vanishing"] is False
    assert payload["surviving_generators"]


def test_ext_requires_case_decision(capsys):
    code = cli.main(["ext", corpus_path("oneform_area_lie"), "--i", "1"])
    capsys.readouterr()
    assert code == 2


def test_ext_split_runs_both_branches(capsys):
    code, report = run_json(capsys, [
        "ext", corpus_path("oneform_area_lie"), "--i", "2", "--split"])
    assert code == 0
    branches = report["branches"]
    assert len(branches) == 2
    flags = {tuple(b["branch"]): b["vanishing"] for b in branches}
    assert flags[("c=0",)] is False
    assert flags[("c!=0",)] is True


def test_spencer_command(capsys):
    code, report = run_json(capsys, ["spencer", "--family", "killing",
                                     "--n", "4"])
    assert code == 0
    assert report["payload"]["H2"] == 20
    assert report["payload"]["H3"] == 20
    code, report = run_json(capsys, ["spencer", "--diagram", "--n", "5"])
    assert report["payload"]["diagram"]["h3_conformal"] == 35


def test_exit_codes(capsys, tmp_path):
    assert cli.main(["cc", str(tmp_path / "missing.dms")]) == 1
    capsys.readouterr()
    bad = tmp_path / "bad.dms"
    bad.write_text("vars x; unknowns y; P: d1(y = u;")
    assert cli.main(["cc", str(bad)]) == 1
    capsys.readouterr()


def test_determinism(capsys):
    _, first = run_json(capsys, ["cc", corpus_path("unexpected_cc_pair")])
    _, second = run_json(capsys, ["cc", corpus_path("unexpected_cc_pair")])
    assert strip_timing(first) == strip_timing(second)


def test_report_roundtrip_and_markdown(capsys, tmp_path):
    out = tmp_path / "report"
    code = cli.main(["cc", corpus_path("unexpected_cc_pair"),
                     "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    data = json.loads((out / "report.json").read_text())
    assert json.loads(json.dumps(data)) == data
    md = (out / "report.md").read_text()
    assert md.startswith("# cc")


def test_corpus_runner_empty_dir(tmp_path, capsys):
    assert cli.main(["corpus", "--dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "0/0" in out


def test_corpus_filter(capsys):
    code = cli.main(["corpus", "--filter", "double_pendulum"])
    out = capsys.readouterr().out
    assert code == 0
    assert "double_pendulum" in out


def test_corpus_case_split_branches():
    results = run_case("oneform_area_lie")
    branch_checks = [r for r in results if "case" in r.check]
    assert len(branch_checks) >= 2
    assert all(r.passed for r in results)
