import json
import re
import subprocess
import sys

import pytest

from conekit import cli, registry
from conekit.instance import InstanceError, load
from conekit.report import dumps, make_report


def run(*argv):
    return subprocess.run([sys.executable, "-m", "conekit.cli", *argv], capture_output=True, text=True)


def results(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)["results"]


# ---------------------------------------------------------------- commands

def test_cone_tangent(capsys):
    code, res = results(capsys, "cone", "--instance", "ex3.4i", "--set", "O1", "--which", "tangent")
    assert code == 0
    piece = res["cone"]["cone"]["pieces"][0]
    assert piece["rays"] == [["0", "1"]] and piece["lineality"] == [["1", "0"]]


def test_cone_frechet(capsys):
    _, res = results(capsys, "cone", "--instance", "ex3.4i", "--set", "O1", "--which", "frechet")
    assert res["cone"]["cone"]["pieces"][0]["rays"] == [["0", "-1"]]


def test_cone_whole_space(tmp_path, capsys):
    doc = {"schema": "conekit-instance/1", "dimension": 2, "sets": {"R2": {"type": "whole"}},
           "points": {"o": [0, 0]}}
    p = tmp_path / "w.json"
    p.write_text(json.dumps(doc))
    _, res = results(capsys, "cone", "--instance", str(p))
    piece = res["cone"]["cone"]["pieces"][0]
    assert piece["ineqs"] == [] and piece["eqs"] == []


@pytest.mark.parametrize("name, conds, want", [
    ("ex4.8i-lin", "chip,scc", {"chip": "yes", "scc": "no"}),
    ("ex4.8i-quad", "chip,scc", {"chip": "no", "scc": "yes"}),
    ("ex4.8ii", "scc,fmcq,cqc", {"scc": "yes", "fmcq": "no", "cqc": "no"}),
])
def test_qualify(capsys, name, conds, want):
    code, res = results(capsys, "qualify", "--instance", name, "--conditions", conds)
    assert code == 0
    assert {k: v["holds"] for k, v in res.items()} == want


def test_qualify_witness(capsys):
    _, res = results(capsys, "qualify", "--instance", "ex4.8i-lin", "--conditions", "scc")
    assert res["scc"]["witness"] == ["0", "1"]


def test_certify_exit_codes(capsys):
    code, res = results(capsys, "certify", "--instance", "lin-sip")
    assert code == 0 and res["sip"]["status"] == "certified"
    code, res = results(capsys, "certify", "--instance", "ex4.8ii")
    assert code == 1 and res["sip"]["failed"] == ["CHIP"]


def test_inconclusive_exit_code(capsys):
    code, res = results(capsys, "qualify", "--instance", "ex3.4i", "--conditions", "interior")
    assert res["interior"]["holds"] == "inconclusive-at-K" and code == 2


def test_extremal_and_pareto(capsys):
    _, res = results(capsys, "extremal", "--instance", "quadrants")
    assert res["extremal"]["verified"] is True and res["extremal"]["normalization"] == "1"
    _, res = results(capsys, "pareto", "--instance", "pareto-abs")
    assert res["coderivative-at-zero"]["trivial"] is True
    assert res["certificate"]["ystar"] == ["1"]


def test_text_output(capsys):
    assert cli.main(["qualify", "--instance", "ex4.8i-lin", "--conditions", "chip", "--text"]) == 0
    out = capsys.readouterr().out
    assert "chip: holds=yes" in out


# ---------------------------------------------------------------- registry

def test_registry_list(capsys):
    _, res = results(capsys, "registry", "list")
    assert len(res) >= 8 and "ex3.4ii" in res


def test_registry_show_template(capsys):
    cli.main(["registry", "show", "ex3.4ii", "--text"])
    assert "φ_i(x):=i x² if x<0" in capsys.readouterr().out


def test_registry_run_all():
    proc = run("registry", "run-all")
    assert proc.returncode == 0, proc.stdout[-2000:]
    summary = json.loads(proc.stdout)["results"]["summary"]
    assert summary["mismatches"] == 0 and summary["checks"] >= len(registry.ENTRIES)


def test_registry_detects_mismatch(monkeypatch):
    entry = registry.get("antipodal")
    bad = registry.Check("qualify", {"conditions": "nqc"}, {"nqc.holds": "yes"})
    broken = registry.Entry(entry.name, entry.summary, entry.display, entry.doc, (bad,))
    rows = cli.run_entry(broken)
    assert rows[0][1] is False and "expected 'yes'" in rows[0][2]


# ---------------------------------------------------------------- report invariants

def test_reports_deterministic():
    a = run("qualify", "--instance", "ex4.8ii", "--conditions", "chip,scc,sqc,fmcq,cqc")
    b = run("qualify", "--instance", "ex4.8ii", "--conditions", "chip,scc,sqc,fmcq,cqc")
    assert a.stdout == b.stdout and a.stdout


FLOAT = re.compile(r"(?<![\"\w.])-?\d+\.\d+(e-?\d+)?(?![\"\w])")


@pytest.mark.parametrize("argv", [
    ("qualify", "--instance", "ex3.4i", "--conditions", "chip,regularity,rank"),
    ("pareto", "--instance", "pareto-abs"),
    ("registry", "run-all"),
])
def test_no_unlabeled_floats(argv):
    out = run(*argv).stdout
    for line in out.splitlines():
        if FLOAT.search(line):
            assert '"approx"' in line, line


def test_timing_flag_adds_timing(capsys):
    cli.main(["cone", "--instance", "ex3.4i", "--timing"])
    rep = json.loads(capsys.readouterr().out)
    assert "approx" in json.dumps(rep["timing"])


def test_make_report_counts_exactness():
    from conekit.families import RegularityEstimate
    rep = make_report("x", "y", {"a": RegularityEstimate(1.5, "bounded", False, ())})
    assert rep["exactness"] == {"exact": 0, "approximate": 1}
    assert '"approx": 1.5' in dumps(rep)


# ---------------------------------------------------------------- instance errors

def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "schema": "conekit-instance/1",\n  "dimension": 2,\n  oops\n}')
    with pytest.raises(InstanceError) as exc:
        load(str(p))
    assert exc.value.line == 4


def test_schema_violation_reports_path():
    with pytest.raises(InstanceError) as exc:
        load({"schema": "conekit-instance/1", "dimension": 2, "sets": {"A": {"type": "halfspace", "a": "x"}}})
    assert exc.value.path[:2] == ("sets", "A")


def test_unknown_reference_and_cycle():
    with pytest.raises(InstanceError):
        load({"schema": "conekit-instance/1", "dimension": 2, "families": {"F": {"members": ["nope"]}}})
    with pytest.raises(InstanceError, match="cyclic"):
        load({"schema": "conekit-instance/1", "dimension": 2,
              "sets": {"A": {"type": "union", "of": ["B"]}, "B": {"type": "union", "of": ["A"]}}})


def test_dimension_mismatch():
    with pytest.raises(InstanceError, match="dimension"):
        load({"schema": "conekit-instance/1", "dimension": 3, "sets": {"H": {"type": "halfspace", "a": [1, 0]}}})


def test_rational_literals():
    inst = load({"schema": "conekit-instance/1", "dimension": 2, "sets": {"H": {"type": "halfspace", "a": ["1/3", -2]}},
                 "points": {"p": ["-1/2", 0]}})
    from fractions import Fraction
    assert inst.points["p"] == (Fraction(-1, 2), 0)


def test_error_exit_code(tmp_path):
    proc = run("cone", "--instance", str(tmp_path / "missing.json"))
    assert proc.returncode == 1 and "error" in proc.stderr


def test_kmax_override(monkeypatch, capsys):
    monkeypatch.setenv("CONEKIT_KMAX", "6")
    _, res = results(capsys, "chip", "--instance", "ex3.4ii")
    assert res["chip"]["K_used"] <= 6
