import csv
import json

import pytest

from robsemi.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_project_writes_json(tmp_path, capsys):
    path = tmp_path / "p.json"
    code, out, _ = run(capsys, "project", "--ball", "v", "--radius", "0.1", "-o", str(path))
    assert code == 0 and "coordinate 1" in out
    rec = json.loads(path.read_text())
    c = rec["coordinates"][0]
    assert c["lower"] == -c["upper"] and rec["ball"] == "v"


@pytest.mark.parametrize("ball,radius,word", [("v", "0.5", "total variation"), ("h", "0.4", "Hellinger"),
                                              ("c", "1.0", "contamination")])
def test_degenerate_projection_exits_2(capsys, ball, radius, word):
    model = "exponential-scale" if ball == "c" else "normal-location"
    code, _, err = run(capsys, "project", "--model", model, "--ball", ball, "--radius", radius)
    assert code == 2 and word in err


def test_bad_arguments_exit_2(capsys):
    assert run(capsys, "project", "--radius", "-1")[0] == 2
    assert run(capsys, "project", "--model", "nope")[0] == 2
    assert run(capsys, "project", "--ball", "q")[0] == 2
    assert run(capsys, "risk-curves", "--grid", "1:2")[0] == 2
    assert run(capsys, "test-design", "--ball", "h", "--r0", "0.3", "--r1", "0.3")[0] == 2


def test_ic_record(capsys):
    code, out, _ = run(capsys, "ic", "--kind", "hampel", "--radius", "0.1")
    assert code == 0
    rec = json.loads(out[out.index("{"):])
    assert rec["risk"]["ball"] == "v" and rec["A"] > 1


def test_ic_from_csv_model(tmp_path, capsys):
    path = tmp_path / "m.csv"
    path.write_text("point,prob,score_1\n-1,0.25,-1\n0,0.5,0\n1,0.25,1\n")
    code, out, _ = run(capsys, "ic", "--model", str(path), "--kind", "robust-tv", "--radius", "0.05")
    assert code == 0 and "MSE_v" in out


def test_risk_curves_csv(tmp_path, capsys):
    path = tmp_path / "c.csv"
    code, out, _ = run(capsys, "risk-curves", "--grid", "0.05:0.35:4", "-o", str(path))
    assert code == 0 and "beta minimal" in out
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 4 and all(float(r["relMSE"]) > 1 for r in rows)


def test_test_design(capsys):
    code, out, _ = run(capsys, "test-design", "--ball", "c", "--r0", "0.1", "--r1", "0.05")
    assert code == 0
    rec = json.loads(out[out.index("{"):])
    assert rec["kind"] == "c" and 0.05 < rec["power"] < 1


def test_simulate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "simulate", "--n", "100", "--reps", "300", "--seed", "5", "-o", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "quantity,estimate,se,target,z_score"
