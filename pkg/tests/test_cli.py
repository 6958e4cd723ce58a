import json

import numpy as np
import pytest

from least_error.cli import main


@pytest.fixture
def denoise_file(tmp_path):
    p = tmp_path / "p.json"
    assert main(["gen", "--kind", "denoise", "--f", "3,-1,0.5,0.2", "--out", str(p)]) == 0
    return p


@pytest.fixture
def random_file(tmp_path):
    p = tmp_path / "r.json"
    assert main(["gen", "--kind", "random", "--m", "10", "--N", "20", "--k", "2",
                 "--seed", "2", "--out", str(p)]) == 0
    return p


def test_solve_fixed(denoise_file, capsys):
    assert main(["solve", "--problem", str(denoise_file), "--n", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert np.allclose(doc["u"], [3, -1, 0, 0])


def test_missing_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--n", "2"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_level_exit_2(denoise_file, capsys):
    assert main(["solve", "--problem", str(denoise_file)]) == 2
    assert "usage" in capsys.readouterr().err


def test_domain_error_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"m": 2, "N": 2, "astar": [[1, 1], [1, 1]], "f_delta": [1, 2],
                             "basis": [[1, 0], [0, 1]]}))
    assert main(["solve", "--problem", str(p), "--n", "2"]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "RankDeficient"


def test_not_triggered_writes_result(denoise_file, tmp_path, capsys):
    out = tmp_path / "res.json"
    assert main(["solve", "--problem", str(denoise_file), "--rule", "me", "--out", str(out)]) == 1
    assert json.loads(out.read_text())["terminated"] is False
    assert json.loads(capsys.readouterr().err)["error"] == "NotTriggered"


def test_solve_rule_trace(random_file, tmp_path):
    out, trace = tmp_path / "res.json", tmp_path / "trace.csv"
    noisy = tmp_path / "noisy.json"
    assert main(["gen", "--kind", "random", "--m", "10", "--N", "20", "--k", "2", "--seed", "2",
                 "--delta", "0.01", "--out", str(noisy)]) == 0
    assert main(["solve", "--problem", str(noisy), "--rule", "dp", "--n-max", "6",
                 "--trace", str(trace), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["rule"] == "discrepancy"
    assert trace.read_text().splitlines()[0] == "n,l1_norm,residual,d_me,kappa"


def test_kappa_csv(tmp_path, capsys):
    p = tmp_path / "s.json"
    assert main(["gen", "--kind", "singular", "--sigmas", "1,0.5,0.3333333333333333", "--out", str(p)]) == 0
    assert main(["kappa", "--problem", str(p)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,value,method,certified"
    n, value, method, cert = lines[2].split(",")
    assert float(value) == pytest.approx(np.sqrt(5), abs=1e-9) and cert == "true"


def test_check_source(denoise_file, capsys):
    assert main(["check-source", "--problem", str(denoise_file), "--strict"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["margin"] > 0


def test_rate_study_end_to_end(random_file, tmp_path):
    out = tmp_path / "rate.csv"
    assert main(["rate-study", "--problem", str(random_file), "--rule", "dp", "--tau", "2",
                 "--n-max", "6", "--deltas", "1e-1,1e-2,1e-3", "--trials", "2", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("delta,seed,rule,n") and len(rows) == 7
    summary = json.loads(out.with_suffix(".summary.json").read_text())
    assert summary["rule"] == "dp" and summary["failed_cells"] == 0


def test_stability_study(random_file, capsys):
    assert main(["stability-study", "--problem", str(random_file), "--n", "2", "--trials", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["holds"] is True
