import io
import json
import subprocess
import sys

import pytest

from ordvar.cli import run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


def test_constants():
    code, text = call("constants", "--loss", "quadratic", "--p1", "16", "--p2", "16", "--k", "2")
    assert code == 0
    lines = text.splitlines()
    assert "c01=0.0588235294117647" in lines
    d = json.loads(lines[-1])
    assert d["alpha1"] == pytest.approx(1 / 32, rel=1e-14)


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "verify-ierd" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ordvar.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("ordvar ")


def test_usage_errors(capsys):
    assert run(["constants", "--loss", "cubic", "--p1", "5", "--p2", "5", "--k", "2"]) == 2
    assert run(["estimate", "--k", "2", "--loss", "entropy", "--p1", "5"]) == 2
    assert run(["boundary", "--loss", "entropy", "--p1", "5", "--p2", "5", "--k", "2",
                "--component", "1", "--table", "x.csv", "--grid-n", "0"]) == 2
    assert "error" in capsys.readouterr().err


def test_domain_error_exit_one(capsys):
    assert run(["constants", "--loss", "linex:a=1", "--p1", "5", "--p2", "5", "--k", "4"]) == 1
    assert capsys.readouterr().err.startswith("ordvar:")


def test_estimate_fields():
    code, text = call("estimate", "--p1", "16", "--p2", "16", "--mean1", "1016.2937",
                      "--mean2", "818.0654", "--ss1", "1038675.0494", "--ss2", "438664.9655",
                      "--k", "2", "--loss", "entropy", "--variant", "stein_plain")
    assert code == 0 and float(text) == pytest.approx(4.9245e4, rel=5e-4)


def test_analyze_then_estimate_roundtrip(tmp_path):
    out, summ = tmp_path / "table.csv", tmp_path / "s.json"
    code, text = call("analyze", "--data1", "bundled:bengaluru", "--data2", "bundled:hyderabad",
                      "--k", "2", "--losses", "quadratic,entropy", "--out", str(out),
                      "--summary-out", str(summ))
    assert code == 0 and "ks_p_value" in text
    rows = [r.split(",") for r in out.read_text().splitlines()[2:]]
    bz = next(r for r in rows if r[0] == "1" and r[2] == "quadratic" and r[3] == "bz")
    code, text = call("estimate", "--input", str(summ), "--k", "2", "--loss", "quadratic",
                      "--variant", "bz")
    assert code == 0 and text.strip() == bz[4]


def test_boundary_value_and_table(tmp_path):
    common = ("boundary", "--loss", "entropy", "--p1", "16", "--p2", "16", "--k", "2")
    code, text = call(*common, "--component", "1", "--arg", "0.422331")
    assert code == 0 and float(text) == pytest.approx(0.0445714, rel=5e-4)
    path = tmp_path / "b.csv"
    code, _ = call(*common, "--component", "2", "--table", str(path), "--grid-n", "5",
                   "--method", "nested")
    lines = path.read_text().splitlines()
    assert code == 0 and lines[1] == "w,value" and len(lines) == 7


def test_simulate(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p1": 6, "p2": 9, "loss": "entropy", "k": 2, "target": "sigma2",
                               "variants": ["baee", "stein_plain"], "eta_grid": [0.5, 1.0],
                               "n_rep": 1000, "seed": 1}))
    out = tmp_path / "o.csv"
    assert call("simulate", "--config", str(cfg), "--out", str(out))[0] == 0
    assert len(out.read_text().splitlines()) == 2 + 4
    cfg.write_text(json.dumps({"p1": 3, "p2": 3, "loss": "symmetric", "k": 2, "target": "sigma1",
                               "variants": ["baee"], "eta_grid": [0.5], "n_rep": 1000}))
    assert call("simulate", "--config", str(cfg), "--out", str(out))[0] == 1
    assert call("simulate", "--config", str(tmp_path / "missing.json"), "--out", str(out))[0] == 1


@pytest.mark.parametrize("candidate,passed", [("boundary", True), ("baee", True), ("scaled:0.5", False)])
def test_verify_ierd(candidate, passed):
    code, text = call("verify-ierd", "--loss", "quadratic", "--p1", "6", "--p2", "9", "--k", "2",
                      "--component", "1", "--candidate", candidate, "--grid-min", "0.001",
                      "--grid-max", "1000000")
    assert code == 0
    assert json.loads(text)["passed"] is passed
