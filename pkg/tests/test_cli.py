import csv
import json
import os
import subprocess
import sys

import pytest

from sdosc.cli import main
from sdosc.melnikov import melnikov


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_melnikov_matches_library(capsys):
    code, out, _ = run(["melnikov", "--a", "1.2", "--b", "-7.26", "--h", "0.5"], capsys)
    assert code == 0
    assert json.loads(out)["M"] == melnikov(0.5, 1.2, -7.26)


def test_trace_grazing(capsys):
    code, out, _ = run(["trace", "--curve", "grazing", "--delta", "0.1", "--a", "4"], capsys)
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and len(rows) == 1
    assert abs(float(rows[0]["b"]) + 26.083) <= 0.02 and rows[0]["valid"] == "true"


def test_trace_melnikov_curve(tmp_path, capsys):
    code, _, _ = run(["trace", "--curve", "b1", "--a-min", "1.1", "--a-max", "3", "--n", "5",
                      "--out", str(tmp_path)], capsys)
    rows = list(csv.DictReader(open(tmp_path / "b1.csv")))
    assert code == 0 and len(rows) == 5 and all(r["kind"] == "b1" for r in rows)
    assert (tmp_path / "trace.cfg").exists()


def test_classify_point_and_grid(capsys):
    code, out, _ = run(["classify", "--a", "4", "--b", "-24.9", "--delta", "0.1"], capsys)
    assert code == 0 and json.loads(out)["points"][0]["label"] == "I"
    code, out, _ = run(["classify", "--a", "1.2", "--b=-5.2,-5.93,-6", "--delta", "0.1"], capsys)
    assert [p["label"] for p in json.loads(out)["points"]] == ["II", "III", "V"]


def test_cycles_json(tmp_path, capsys):
    code, _, _ = run(["cycles", "--a", "4", "--b", "-25.7", "--delta", "0.1", "--out", str(tmp_path)], capsys)
    d = json.load(open(tmp_path / "cycles.json"))
    assert code == 0 and d["counts"]["small"] == 1 and d["cycles"][0]["stability"] == "stable"


def test_simulate_csv(capsys):
    code, out, _ = run(["simulate", "--a", "4", "--b", "-24.9", "--delta", "0.1", "--x", "-1",
                        "--y", "0", "--stop", "positive_x"], capsys)
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["t", "x", "y", "chart", "event"]
    assert rows[-1][4] == "positive_x_axis"
    assert all(len(r[1].replace("-", "").replace(".", "").lstrip("0")) <= 17 for r in rows[1:])


def test_portrait_file(tmp_path, capsys):
    code, _, _ = run(["portrait", "--a", "4", "--b", "-25.7", "--delta", "0.1", "--seeds", "4:1",
                      "--out", str(tmp_path)], capsys)
    assert code == 0 and (tmp_path / "portrait.svg").read_text().startswith("<svg")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# example\na = 4\nb = -26.1\ndelta = 0.1\n")
    code, out, _ = run(["cycles", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["counts"]["crossing"] == 1
    code, out, _ = run(["cycles", "--config", str(cfg), "--b", "-25.7"], capsys)
    assert json.loads(out)["counts"] == {"crossing": 0, "small": 1, "grazing": 0}


def test_recorded_config_reproduces_run(tmp_path, capsys):
    out1 = tmp_path / "one"
    run(["portrait", "--a", "4", "--b", "-25.7", "--delta", "0.1", "--seeds", "4:1;2:-3",
         "--no-nullcline", "--out", str(out1)], capsys)
    out2 = tmp_path / "two"
    code, _, _ = run(["portrait", "--config", str(out1 / "portrait.cfg"), "--out", str(out2)], capsys)
    assert code == 0
    assert (out1 / "portrait.svg").read_text() == (out2 / "portrait.svg").read_text()
    assert (out1 / "portrait.cfg").read_text() == (out2 / "portrait.cfg").read_text()


def test_exit_codes(tmp_path, capsys):
    assert run(["cycles", "--a", "2"], capsys)[0] == 2
    assert run(["nosuch"], capsys)[0] == 2
    assert run(["cycles", "--a", "0.5", "--b", "-1", "--delta", "0.1"], capsys)[0] == 3
    assert run(["melnikov", "--a", "2", "--b", "-9", "--h", "-1"], capsys)[0] == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert run(["cycles", "--config", str(bad)], capsys)[0] == 2
    assert run(["slice", "--delta", "0.1"], capsys)[0] == 2  # needs --out


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from sdosc import errors, poincare

    def boom(*a, **k):
        raise errors.StepSizeUnderflow("step size underflow")
    monkeypatch.setattr(poincare, "find_cycles", boom)
    assert run(["cycles", "--a", "2", "--b", "-10", "--delta", "0.1"], capsys)[0] == 4


def test_verify_pass_and_fail(tmp_path, capsys):
    code, _, _ = run(["verify", "--only", "1,3", "--out", str(tmp_path)], capsys)
    d = json.load(open(tmp_path / "verify.json"))
    assert code == 0 and d["passed"] and [c["number"] for c in d["checks"]] == [1, 3]
    code, _, _ = run(["verify", "--only", "8", "--out", str(tmp_path / "b")], capsys)
    assert code == 1


@pytest.mark.slow
def test_slice_bundle(tmp_path):
    out = tmp_path / "s"
    r = subprocess.run([sys.executable, "-m", "sdosc.cli", "slice", "--delta", "0.1", "--a-min", "1.1",
                        "--a-max", "1.5", "--n", "5", "--out", str(out)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert sorted(os.listdir(out)) == ["dl1.csv", "dl2.csv", "grazing.csv", "hopf.csv", "slice.cfg", "slice.json"]
    d = json.load(open(out / "slice.json"))
    assert 1.3 < float(d["a0_estimate"]) < 1.4
    assert d["melnikov_special_points"]["a_star"] > 1.4
