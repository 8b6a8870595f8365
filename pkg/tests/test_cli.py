import hashlib
import importlib
import json
import math

import pytest
from click.testing import CliRunner

from dmkit import config
from dmkit.cli import (ResultDocument, cli, load_document, load_model_file, main, parse_model,
                       read_csv)
from dmkit.exceptions import ConvergenceError, ModelFileError


def run_json(capsys, argv) -> dict:
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def test_bundled_models_load(models_dir):
    for name in ("example1", "badL", "satellite", "example5", "static_half"):
        mf = load_model_file(models_dir / f"{name}.json")
        assert mf.name == name
        assert len(mf.digest) == 64
    sat = load_model_file(models_dir / "satellite.json")
    assert sat.has_controller
    assert sat.loop().shape == (2, 2)


def test_positive_feedback_loop_is_normalized():
    mf = parse_model({"feedback": "positive", "model": {"tf": {"num": [1], "den": [1, 1]}}})
    assert mf.loop().siso_tf().num.coeffs == (-1.0,)


def test_state_space_model():
    mf = parse_model({"model": {"ss": {"A": [[-1]], "B": [[1]], "C": [[2]], "D": [[0]]}}})
    assert mf.model.shape == (1, 1)
    assert mf.model.ss.n_states == 1


@pytest.mark.parametrize("data", [
    {},
    {"model": {"tf": {"num": [1]}}},
    {"model": {"tf": {"num": [1], "den": [1]}, "ss": {}}},
    {"model": {"tfm": [[{"num": [1], "den": [1]}], []]}},
    {"model": {"tf": {"num": [1], "den": [0]}}},
    {"feedback": "sideways", "model": {"tf": {"num": [1], "den": [1, 1]}}},
    {"model": {"ss": {"A": [[1, 2]], "B": [[1]], "C": [[1]], "D": [[0]]}}},
    {"model": {"tf": {"num": [1], "den": [1, 1]}}, "controller": {"tf": {"num": [1]}}},
])
def test_malformed_model_files(data):
    with pytest.raises(ModelFileError):
        parse_model(data)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def test_classical_command(capsys, models_dir):
    path = models_dir / "example1.json"
    doc = run_json(capsys, ["classical", str(path)])
    assert doc["command"] == "classical"
    assert doc["schema_version"] == config.SCHEMA_VERSION
    assert doc["input_digest"] == hashlib.sha256(path.read_bytes()).hexdigest()
    gm = doc["results"]["gain_margin"]
    assert gm["upper"] == pytest.approx(3.6, rel=1e-6)
    assert gm["lower"] == 0.0
    assert gm["upper_db"] == pytest.approx(20 * math.log10(3.6), rel=1e-6)
    assert doc["results"]["phase_margin"]["deg"] == pytest.approx(29.1, abs=0.3)


def test_classical_infinite_margin_serializes_as_string(capsys, models_dir):
    doc = run_json(capsys, ["classical", str(models_dir / "static_half.json")])
    assert doc["results"]["gain_margin"]["upper"] == "inf"
    assert "upper_db" not in doc["results"]["gain_margin"]


def test_classical_bad_loop(capsys, models_dir):
    res = run_json(capsys, ["classical", str(models_dir / "badL.json")])["results"]
    assert res["gain_margin"]["lower"] == pytest.approx(0.2, rel=0.03)
    assert res["gain_margin"]["upper"] == pytest.approx(2.1, rel=0.03)
    assert res["phase_margin"]["deg"] == pytest.approx(45.0, rel=0.02)


def test_diskmargin_command(capsys, models_dir):
    doc = run_json(capsys, ["diskmargin", str(models_dir / "example1.json"),
                            "--skew", "0", "--worst-case", "--curve", "7"])
    res = doc["results"]
    assert res["alpha"] == pytest.approx(0.46, abs=0.005)
    assert res["alpha_grid"] == pytest.approx(res["alpha"], rel=1e-3)
    assert set(res["f0"]) == {"re", "im"}
    assert res["geometry"]["kind"] == "interior-disk"
    assert res["guaranteed"]["phi_m_deg"] == pytest.approx(25.8, abs=0.2)
    ver = res["worst_case"]["verification"]
    assert ver["verdict"] == "destabilizing"
    assert ver["passed"] is True
    assert res["worst_case"]["f_hat"]["den"] == pytest.approx([1.0, 2.024], rel=0.01)
    assert len(res["curve"]) == 7
    assert doc["arguments"] == {"model": str(models_dir / "example1.json"), "skew": 0.0,
                                "worst_case": True, "curve": 7}


def test_diskmargin_document_round_trip(tmp_path, models_dir):
    out = tmp_path / "dm.json"
    assert main(["diskmargin", str(models_dir / "static_half.json"), "--skew", "1",
                 "--out", str(out)]) == 0
    doc = load_document(out)
    assert isinstance(doc, ResultDocument)
    assert doc.command == "diskmargin"
    assert isinstance(doc.results["f0"], complex)
    again = json.loads(doc.to_json())
    assert again == json.loads(out.read_text(encoding="utf-8"))


def test_trace_csv(tmp_path, models_dir):
    out = tmp_path / "trace.csv"
    assert main(["trace", str(models_dir / "example5.json"),
                 "--grid", "0.1:1000:400", "--out", str(out)]) == 0
    frame = read_csv(out)
    assert list(frame.columns) == ["omega", "alpha", "gamma_min", "gamma_max", "gamma_m",
                                   "phi_m_deg"]
    assert len(frame) == 400
    tail = frame[frame["omega"] >= 100]
    assert tail["alpha"].to_numpy() == pytest.approx(2.0, rel=0.01)
    assert tail["phi_m_deg"].to_numpy() == pytest.approx(90.0, rel=0.01)


def test_trace_json(capsys, models_dir):
    doc = run_json(capsys, ["trace", str(models_dir / "example1.json"),
                            "--grid", "0.1:10:20", "--format", "json"])
    assert len(doc["results"]["alpha"]) == 20
    assert doc["diagnostics"] == []


def test_mimo_command(capsys, models_dir):
    doc = run_json(capsys, ["mimo", str(models_dir / "satellite.json"), "--points", "input"])
    res = doc["results"]
    assert res["alpha_lower"] <= 0.0997 * 1.02
    assert res["alpha_upper"] >= 0.0997 * 0.98
    assert res["alpha"] == res["alpha_lower"]
    assert res["n_channels"] == 2
    table = res["loop_at_a_time"]
    assert len(table) == 4
    assert {row["location"] for row in table} == {"input", "output"}
    for row in table:
        assert row["g_upper"] == "inf"
        assert row["disk_alpha"] == pytest.approx(2.0, rel=1e-6)


def test_mimo_input_output_points(capsys, models_dir):
    res = run_json(capsys, ["mimo", str(models_dir / "satellite.json"),
                            "--points", "io"])["results"]
    assert res["n_channels"] == 4
    assert res["alpha_lower"] <= 0.0498 * 1.02
    assert res["alpha_upper"] >= 0.0498 * 0.98


def test_mimo_on_a_single_loop_matches_the_disk_margin(capsys, models_dir):
    path = str(models_dir / "example1.json")
    res = run_json(capsys, ["mimo", path])["results"]
    disk = run_json(capsys, ["diskmargin", path])["results"]
    assert res["n_channels"] == 1
    assert res["alpha_lower"] == pytest.approx(disk["alpha"], rel=1e-6)
    assert res["alpha_upper"] == pytest.approx(disk["alpha"], rel=1e-6)
    assert len(res["loop_at_a_time"]) == 1
    assert res["loop_at_a_time"][0]["disk_alpha"] == pytest.approx(disk["alpha"], rel=1e-9)


def test_diskmargin_gain_variation(capsys, models_dir):
    path = str(models_dir / "example1.json")
    doc = run_json(capsys, ["diskmargin", path, "--variation", "0.9", "1.1"])
    var = doc["results"]["variation"]
    assert var["tolerated"] is True
    assert var["gamma_min"] == pytest.approx(0.9)
    assert var["gamma_max"] == pytest.approx(1.1)
    assert doc["results"]["sigma"] == pytest.approx(-1.0)
    assert doc["arguments"]["variation"] == [0.9, 1.1]
    assert doc["diagnostics"] == []

    doc = run_json(capsys, ["diskmargin", path, "--variation", "0.2", "5"])
    assert doc["results"]["variation"]["tolerated"] is False
    assert "exceeds the disk margin" in doc["diagnostics"][0]


def test_diskmargin_phase_variation(capsys, models_dir):
    doc = run_json(capsys, ["diskmargin", str(models_dir / "example1.json"),
                            "--phase-variation", "20"])
    var = doc["results"]["variation"]
    assert var["sigma"] == 0.0
    assert var["phi_max_deg"] == pytest.approx(20.0, rel=1e-9)
    assert var["tolerated"] is True


def test_exclusion_command(capsys, tmp_path, models_dir):
    path = str(models_dir / "example1.json")
    doc = run_json(capsys, ["exclusion", path, "-s", "-1", "-s", "0"])
    disks = doc["results"]["disks"]
    assert [d["sigma"] for d in disks] == [-1.0, 0.0]
    for d in disks:
        assert d["left"] < -1.0 < d["right"]
        assert d["tangency_gap"] >= -1e-6 * d["radius"]
    assert len(doc["results"]["nyquist"]) == doc["results"]["nyquist_samples"]

    out = tmp_path / "nyquist.csv"
    doc = run_json(capsys, ["exclusion", path, "--out", str(out)])
    assert "nyquist" not in doc["results"]
    frame = read_csv(out)
    assert list(frame.columns) == ["omega", "re", "im"]


def test_exclusion_of_the_complementary_disk(capsys, models_dir):
    disk = run_json(capsys, ["exclusion", str(models_dir / "example1.json"),
                             "-s", "1"])["results"]["disks"][0]
    assert disk["center"] == pytest.approx(-1.0, rel=1e-9)
    assert disk["radius"] == pytest.approx(disk["alpha"], rel=1e-9)
    assert disk["left"] == pytest.approx(-1.0 - disk["alpha"], rel=1e-9)


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

def test_missing_file_exits_1(capsys, tmp_path):
    assert main(["classical", str(tmp_path / "nope.json")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_invalid_json_exits_1(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["diskmargin", str(path)]) == 1


def test_usage_error_exits_1(models_dir):
    assert main(["classical", str(models_dir / "example1.json"), "--bogus"]) == 1
    assert main(["nosuchcommand"]) == 1


def test_mimo_model_rejected_by_siso_command(models_dir):
    assert main(["diskmargin", str(models_dir / "satellite.json")]) == 1


def test_unstable_loop_exits_2(capsys, write_model):
    path = write_model({"model": {"tf": {"num": [-2], "den": [1, 1]}}})
    for cmd in ("classical", "diskmargin", "trace", "exclusion"):
        assert main([cmd, path]) == 2
    assert "unstable" in capsys.readouterr().err


def test_cli_runner_reports_exit_codes(models_dir, write_model):
    runner = CliRunner()
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert config.TOOL_VERSION in result.output
    result = runner.invoke(cli, ["classical", str(models_dir / "example1.json")])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["command"] == "classical"
    unstable = write_model({"model": {"tf": {"num": [-2], "den": [1, 1]}}})
    assert runner.invoke(cli, ["diskmargin", unstable]).exit_code == 2


def test_bad_variation_exits_1(models_dir):
    path = str(models_dir / "example1.json")
    assert main(["diskmargin", path, "--variation", "1.2", "2.0"]) == 1
    assert main(["diskmargin", path, "--variation", "0.5", "2", "--phase-variation", "10"]) == 1


def test_numerical_failure_exits_3(capsys, monkeypatch, models_dir):
    def stalled(L):
        raise ConvergenceError("crossover refinement did not converge")

    monkeypatch.setattr(importlib.import_module("dmkit.cli.main"), "classical_margins", stalled)
    assert main(["classical", str(models_dir / "example1.json")]) == 3
    assert "did not converge" in capsys.readouterr().err


def test_read_csv_reports_missing_table(tmp_path):
    with pytest.raises(ModelFileError):
        read_csv(tmp_path / "absent.csv")
