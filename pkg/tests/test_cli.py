import csv
import json
import subprocess
import sys

import pytest

from starforge.cli import CSV_COLUMNS, SUITES, bundled_scenario, main


def scenario(**over):
    sc = json.loads(json.dumps(bundled_scenario()))
    sc.update(over)
    return sc


def write(tmp_path, obj, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_bundled_run(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["status"] == "pass"
    assert [s["suite"] for s in rep["suites"]] == list(SUITES)
    printed = capsys.readouterr().out.splitlines()
    assert printed == [f"{s}: pass" for s in SUITES]


def test_jobs_do_not_change_report(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--out", str(a), "--jobs", "1"]) == 0
    assert main(["run", "--out", str(b), "--jobs", "2"]) == 0
    for name in ("report.json", "low_order_tables.csv", "moller_terms.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_low_order_tables_csv(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--out", str(out), "--suites", "low-order-tables"]) == 0
    with open(out / "low_order_tables.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 1 + 1 + 4 + 28
    assert {r[1] for r in rows[1:]} == {"G5(2)"}


def test_emit_latex(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--out", str(out), "--suites", "low-order-tables", "--emit-latex"]) == 0
    tex = (out / "b_tables.tex").read_text()
    assert tex.count("\\Gamma_{") == 1 + 4 + 28
    assert "% B_3: 28 graphs" in tex


def test_numeric_lambda_needs_nilpotent(tmp_path, capsys):
    # the bundled V has a phi_0 phi_1 phi_2 term, so its Hessian is not diagonal
    p = write(tmp_path, scenario(lambda_value="2"))
    assert main(["run", "--scenario", p, "--out", str(tmp_path / "o")]) == 2
    assert "nilpotent regime required" in capsys.readouterr().err


def test_non_strict_model_rejected_for_numeric(tmp_path, capsys):
    sc = scenario(lambda_value="1")
    sc["model"]["strict"] = False
    sc["interaction"] = {"monomials": [{"indices": [0, 0, 0], "coeff": {"re": "1/6", "im": "0"}}]}
    assert main(["run", "--scenario", write(tmp_path, sc), "--out", str(tmp_path / "o")]) == 2
    assert "nilpotent regime required" in capsys.readouterr().err


def test_numeric_scenario_runs(tmp_path):
    sc = scenario(lambda_value="-3/2", bounds={"hbar_max": 1, "lambda_max": 0})
    sc["interaction"] = {"monomials": [
        {"indices": [1, 1, 1], "coeff": {"re": "1/6", "im": "0"}},
        {"indices": [0, 0], "coeff": {"re": "1/2", "im": "0"}},
    ]}
    out = tmp_path / "o"
    assert main(["run", "--scenario", write(tmp_path, sc), "--out", str(out),
                 "--suites", "moller,interacting,kgraphs"]) == 0
    assert json.loads((out / "report.json").read_text())["lambda_value"] == "-3/2"


@pytest.mark.parametrize("mutate", [
    lambda s: s.pop("model"),
    lambda s: s.update(bogus=1),
    lambda s: s.update(max_degree=9),
    lambda s: s["bounds"].update(hbar_min=-1),
])
def test_schema_violations(tmp_path, capsys, mutate):
    sc = scenario()
    mutate(sc)
    assert main(["run", "--scenario", write(tmp_path, sc), "--out", str(tmp_path / "o")]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_unknown_suite(tmp_path):
    assert main(["run", "--out", str(tmp_path / "o"), "--suites", "nope"]) == 2


@pytest.mark.parametrize("args, rows", [
    (["G1(2)", "--max-edges", "2"], 3),
    (["G5(2)", "--excess", "2", "--max-unlabelled", "4"], 4),
])
def test_enumerate_rows(capsys, args, rows):
    assert main(["enumerate", *args]) == 0
    lines = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert lines[0] == CSV_COLUMNS
    assert len(lines) == 1 + rows


def test_enumerate_unknown_family():
    assert main(["enumerate", "G99", "--max-edges", "1"]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "starforge", "enumerate", "G1(2)", "--max-edges", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert len(res.stdout.splitlines()) == 1 + 2
