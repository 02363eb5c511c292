import io
import json
import subprocess
import sys

import pytest

from stablefield import FilterSpec, PairSample, rho
from stablefield.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_cov_json():
    code, out, _ = call("cov", "--alpha", "1.5", "--beta1", "2", "--beta2", "2", "--k", "3,-4", "--tol", "1e-8")
    assert code == 0
    doc = json.loads(out)
    assert {"value", "error_bound", "terms_used", "scc"} <= set(doc)
    assert doc["error_bound"] <= 1e-8
    ref = rho(FilterSpec.parametric(1.5, 2, 2), (3, -4), 1e-8)
    assert abs(doc["value"] - ref.value) <= doc["error_bound"] + ref.error_bound


def test_cov_csv():
    code, out, _ = call("cov", "--alpha", "1", "--override", "[[0,0,1]]", "--k", "0,0", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# stablefield-cov v1"
    assert lines[1] == "k1,k2,value,error_bound,terms_used,scc"
    assert float(lines[2].split(",")[2]) == pytest.approx(2**-0.5)


def test_cov_empty_override():
    code, out, _ = call("cov", "--alpha", "1.5", "--override", "[[0,0,0.0]]", "--k", "1,0")
    assert code == 1
    assert json.loads(out)["error"] == "invalid_spec"


def test_direction_required_is_numeric_error():
    code, out, _ = call("classify", "--alpha", "1.5", "--beta1", "3", "--beta2", "3", "--quadrant", "neg")
    assert code == 1
    assert json.loads(out)["error"] == "direction_required"


def test_classify_symbolic_boundary():
    code, out, _ = call("classify", "--alpha", "1.5", "--beta1", "1/(alpha-1)", "--beta2", "3")
    assert code == 0
    doc = json.loads(out)
    assert (doc["theorem"], doc["case"]) == (1, 5)
    assert set(doc["rate"]) == {"a", "b", "logs"}


def test_classify_uncovered_exit():
    code, out, err = call("classify", "--alpha", "1.5", "--beta1", "3", "--beta2", "1", "--quadrant", "neg", "--direction", "zero")
    assert code == 2
    assert json.loads(out)["uncovered"] is True
    assert "beta = 1" in err


def test_constant():
    code, out, _ = call("constant", "--alpha", "1.5", "--beta1", "3", "--beta2", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["recipe"] == "SeriesTimesBeta1D"
    assert doc["value"] == pytest.approx(8.20702, rel=1e-5)


def test_verify_uncovered_message():
    code, out, err = call("verify", "--alpha", "1.5", "--beta1", "3", "--beta2", "1", "--quadrant", "neg", "--direction", "zero")
    assert code == 2
    assert "outside every covered case" in err
    assert json.loads(out)["verdict"] == "Uncovered"


def test_verify_csv_and_sidecar(tmp_path):
    out_path = tmp_path / "conv.csv"
    code, _, _ = call(
        "verify", "--alpha", "1.5", "--beta1", "3", "--beta2", "3", "--quadrant", "neg", "--direction", "1",
        "--n", "16,32,64,128,256", "--gap-target", "0.1", "--format", "csv", "--out", str(out_path),
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "# stablefield-cov v1"
    assert lines[1] == "n,m,rho,rho_error,rate,ratio,predicted,rel_gap"
    assert len(lines) == 7
    side = json.loads((tmp_path / "conv.csv.json").read_text())
    assert side["verdict"] == "Converging"


def test_verify_inconclusive_exit():
    code, out, _ = call("verify", "--alpha", "1.5", "--beta1", "3", "--beta2", "3", "--n", "16,32,64,128")
    assert code == 2
    assert json.loads(out)["verdict"] == "Inconclusive"


def test_regime_map_csv():
    code, out, _ = call("regime-map", "--alpha", "1.5", "--beta1-grid", "1:3:3", "--beta2-grid", "1:3:3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# stablefield-cov v1"
    assert lines[1] == "beta1,beta2,label"
    assert len(lines) == 2 + 9
    assert "1.0,3.0,T1.3*" in lines


def test_simulate_dump(tmp_path):
    dump = tmp_path / "x.sasp"
    code, out, _ = call(
        "simulate", "--alpha", "1.5", "--beta1", "2", "--beta2", "2", "--k", "2,1", "--count", "5000",
        "--seed", "3", "--dump", str(dump),
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["count"] == 5000 and "ecf" in doc
    assert PairSample.read_pairs(dump.read_bytes()).shape == (5000, 2)


def test_symbolic_rejected_for_cov():
    code, _, err = call("cov", "--alpha", "1.5", "--beta1", "1/alpha+1", "--beta2", "2", "--k", "1,1")
    assert code == 64
    assert "numeric" in err


def test_usage_errors():
    assert call()[0] == 64
    assert call("bogus")[0] == 64
    assert call("cov", "--alpha", "1.5", "--beta1", "2", "--beta2", "2")[0] == 64
    assert call("cov", "--alpha", "1.5", "--beta1", "2", "--beta2", "2", "--k", "1;2")[0] == 64
    assert call("classify", "--alpha", "1.5", "--beta1", "2", "--beta2", "2", "--direction", "north")[0] == 64
    assert call("cov", "--config", "/nonexistent/cfg.json", "--k", "1,1")[0] == 64


def test_paths_validated_before_work(tmp_path):
    code, out, err = call(
        "cov", "--alpha", "1.5", "--beta1", "2", "--beta2", "2", "--k", "1,1", "--out", str(tmp_path / "no" / "x.json")
    )
    assert code == 64 and out == ""


def test_numeric_error_json():
    code, out, err = call("cov", "--alpha", "1.5", "--beta1", "0.5", "--beta2", "2", "--k", "1,1")
    assert code == 1
    doc = json.loads(out)
    assert doc["error"] == "beta_too_small" and "message" in doc


def test_numeric_error_csv_has_no_stdout():
    code, out, err = call("cov", "--alpha", "3", "--beta1", "2", "--beta2", "2", "--k", "1,1", "--format", "csv")
    assert code == 1 and out == "" and "error" in err


def test_override_refused_by_classifier():
    code, out, _ = call("classify", "--alpha", "1", "--override", "[[0,0,1]]")
    assert code == 1
    assert json.loads(out)["error"] == "constant_evaluation_failed"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 1.5, "beta1": 2, "beta2": 2, "k": "1,1", "tol": 1e-6}))
    code, out, _ = call("cov", "--config", str(cfg))
    assert code == 0
    a = json.loads(out)
    code, out, _ = call("cov", "--config", str(cfg), "--k", "2,2")
    b = json.loads(out)
    assert a["lag"] == [1, 1] and b["lag"] == [2, 2]


def test_override_file(tmp_path):
    f = tmp_path / "ov.json"
    f.write_text(json.dumps([[0, 0, 1.0], [1, 1, 1.0]]))
    code, out, _ = call("cov", "--alpha", "2", "--override", str(f), "--k", "1,1")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0)


def test_weights_flag():
    code, out, _ = call(
        "cov", "--alpha", "1.5", "--beta1", "3", "--beta2", "3", "--k", "1,0", "--weights", '{"kind": "rational", "a": 0.5}'
    )
    assert code == 0
    ref = rho(FilterSpec.parametric(1.5, 3, 3), (1, 0), 1e-10).value
    assert json.loads(out)["value"] > ref


def test_json_deterministic():
    argv = ["simulate", "--alpha", "1.2", "--beta1", "2", "--beta2", "2.5", "--k", "1,-1", "--count", "2000", "--seed", "5"]
    a = call(*argv)[1]
    b = call(*argv, "--threads", "2")[1]
    assert a == b
    assert "NaN" not in a and "Infinity" not in a


def test_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "stablefield.cli", "classify", "--alpha", "0.8", "--beta1", "2", "--beta2", "2"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["case"] == 2
