import csv
import io
import json

import pytest

from hfclt.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from hfclt.experiments import ExperimentConfig, ratio_ladder, run_example1, run_example2


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_and_convolve(tmp_path, capsys):
    spec = tmp_path / "s.json"
    assert main(["spectrum", "--model", "exponential", "--theta", "0.5", "--cutoff", "4",
                 "--out", str(spec)]) == EXIT_OK
    assert json.loads(spec.read_text())["model"]["type"] == "exponential"
    assert main(["convolve", "--spectrum", str(spec), "--order", "2"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["order"] == 2 and len(d["values"]) == 17


def test_clt_check(capsys):
    assert main(["clt-check", "--model", "algebraic", "--cutoff", "32", "--order", "3",
                 "--freqs", "4,8"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4 and {r["q"] for r in rows} == {"1", "2"}
    assert main(["clt-check", "--cutoff", "16", "--freqs", "4", "--transform", "cube"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["orders"] == [1, 3]


def test_expand(capsys):
    assert main(["expand", "--transform", "cube", "--max-order", "4"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert [float(r["c_m"]) for r in rows] == [3.0, 0.0, 6.0, 0.0]


def test_simulate_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--freqs", "2"])
    assert exc.value.code == 2


def test_simulate(capsys):
    assert main(["simulate", "--model", "exponential", "--cutoff", "4", "--freqs", "2",
                 "--orders", "1,2", "--reps", "200", "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("freq,order,stat,estimate,stderr,reps")


def test_kernel_verify(capsys):
    assert main(["kernel-verify", "--trials", "20", "--seed", "1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["failures"] == 0


def test_exit_codes(tmp_path):
    assert main(["spectrum", "--alpha", "0.5"]) == EXIT_CONFIG
    assert main(["spectrum", "--spectrum", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["convolve", "--cutoff", "10000000", "--order", "8"]) == EXIT_BUDGET
    assert main(["clt-check", "--cutoff", "4", "--freqs", "99"]) == EXIT_NUMERICAL
    assert main(["example1", "--start", "8", "--stop", "4096", "--cutoff", "64"]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 1, "cutoff": 1,
                               "model": {"type": "table", "values": [1, 0, 0]}}))
    assert main(["spectrum", "--spectrum", str(bad)]) == EXIT_CONFIG


def test_example1_manifest_rerun(tmp_path):
    out = tmp_path / "ex1.csv"
    assert main(["example1", "--cutoff", "256", "--start", "8", "--stop", "64",
                 "--out", str(out)]) == EXIT_OK
    manifest = tmp_path / "ex1.manifest.json"
    m = json.loads(manifest.read_text())
    assert m["config"]["cutoff"] == 256 and "numpy" in m["versions"]
    again = tmp_path / "again.csv"
    assert main(["example1", "--config", str(manifest), "--out", str(again)]) == EXIT_OK
    assert again.read_bytes() == out.read_bytes()


def test_mc_validate_manifest_rerun(tmp_path):
    out = tmp_path / "mc.csv"
    args = ["mc-validate", "--seed", "5", "--cutoff", "16", "--start", "4", "--stop", "16",
            "--reps", "300", "--out", str(out)]
    assert main(args) == EXIT_OK
    rows = _rows(out.read_text())
    assert {r["m"] for r in rows} == {"1", "2"}
    again = tmp_path / "again.csv"
    assert main(["mc-validate", "--seed", "5", "--config", str(tmp_path / "mc.manifest.json"),
                 "--out", str(again)]) == EXIT_OK
    assert again.read_bytes() == out.read_bytes()


def test_runner_model_checks():
    with pytest.raises(ValueError):
        run_example1(ExperimentConfig(model={"type": "exponential", "theta": 0.5}))
    with pytest.raises(ValueError):
        run_example2(ExperimentConfig())


def test_single_frequency_ladder():
    cfg = ExperimentConfig(cutoff=64, freqs=[16])
    rows = _rows(run_example1(cfg))
    assert len(rows) == 1 and rows[0]["freq"] == "16"


def test_linear_ladder():
    cfg = ExperimentConfig(cutoff=64, ladder="linear", ladder_start=4, ladder_stop=20,
                           ladder_step=8)
    assert cfg.frequencies() == [4, 12, 20]


def test_large_theta_underflows_to_zero():
    cfg = ExperimentConfig(model={"type": "exponential", "theta": 5.0, "h": [1.0]},
                           cutoff=256, orders=[2, 3], ladder_start=16, ladder_stop=256)
    rows = ratio_ladder(cfg)
    for k, m, q, r3, r2, status in rows:
        assert r3 == r3 and r2 == r2  # no NaN
        assert 0 <= r3 <= 1
    assert any(status == "underflow" and r3 == 0.0 for *_, r3, _, status in rows)


def test_example2_ladder_halves():
    cfg = ExperimentConfig(model={"type": "exponential", "theta": 0.5, "h": [1.0]}, cutoff=512,
                           orders=[2], ladder_start=16, ladder_stop=256)
    r = [float(row["cond3_ratio"]) for row in _rows(run_example2(cfg))]
    for a, b in zip(r, r[1:]):
        assert b / a == pytest.approx(0.5, rel=0.15)
