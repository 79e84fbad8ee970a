import csv
import json
import math
import subprocess
import sys

import pytest

from meanfix.cli import main


def run_json(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text())


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    return json.loads(lines[0][2:]), list(csv.reader(lines[1:]))


class TestExamplesVerify:
    @pytest.mark.parametrize("eid", ["ex1-l1", "ex2-l2", "disc-f", "affine", "identity"])
    def test_passes(self, tmp_path, eid):
        code, doc = run_json(tmp_path, "examples", "verify", "--example", eid, "--trials", "5000")
        assert code == 0 and doc["passed"]
        assert doc["schema"] == "meanfix/1" and doc["command"] == "examples verify"
        assert all(c["passed"] for c in doc["checks"])

    def test_config_echo(self, tmp_path):
        _, doc = run_json(tmp_path, "examples", "verify", "--trials", "2000", "--seed", "7", "--dim", "10")
        cfg = doc["config"]
        assert cfg["seed"] == 7 and cfg["dim"] == 10 and cfg["alpha"] == [0.5, 0.5]
        assert cfg["lambda"] == 0.5 and cfg["trials"] == 2000 and cfg["p"] == 1.0


class TestAfpsRun:
    def test_km_json(self, tmp_path):
        code, doc = run_json(tmp_path, "afps", "run", "--trials", "2000")
        assert code == 0
        assert doc["trace"]["final_residual"] < 1e-3 and doc["trace"]["monotone"]
        assert set(doc["residual_report"]) >= {"r1", "r2", "r_chain1", "r_tau", "r_tAlpha", "r_T"}

    def test_anchored(self, tmp_path):
        code, doc = run_json(tmp_path, "afps", "run", "--scheme", "anchored", "--eps", "1e-2", "--trials", "2000")
        assert code == 0 and doc["trace"]["scheme"] == "anchored"

    def test_gjp_chain_on_affine(self, tmp_path):
        code, doc = run_json(tmp_path, "afps", "run", "--example", "affine", "--trials", "2000")
        assert code == 0 and doc["gjp_chain"]["passed"]
        assert doc["gjp_chain"]["observed"] < 1e-9

    def test_csv_long_format(self, tmp_path):
        out = tmp_path / "trace.csv"
        assert main(["afps", "run", "--format", "csv", "--trials", "2000", "--out", str(out)]) == 0
        cfg, rows = read_csv(out)
        assert cfg["config"]["scheme"] == "km"
        assert rows[0] == ["step", "metric", "value"]
        metrics = {r[1] for r in rows[1:]}
        assert {"residual", "r1", "r_tau", "k_hat_T"} <= metrics
        assert rows[1][:2] == ["0", "residual"]

    def test_not_converging_exits_one(self, tmp_path):
        code, doc = run_json(tmp_path, "afps", "run", "--max-iter", "2", "--tol", "1e-12", "--trials", "500")
        assert code == 1 and not doc["passed"]


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["afps", "run", "--trials", "1000"],
        ["lipschitz", "--trials", "1000"],
        ["witness", "--trials", "500", "--refine-steps", "20"],
        ["conditions", "sweep", "--n", "3", "--step", "0.1"],
    ])
    def test_byte_identical(self, tmp_path, argv):
        # same --out both times: the path is part of the echoed config
        out = tmp_path / "o"
        main([*argv, "--out", str(out)])
        first = out.read_bytes()
        main([*argv, "--out", str(out)])
        assert out.read_bytes() == first

    def test_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MEANFIX_SEED", "11")
        _, doc = run_json(tmp_path, "lipschitz", "--trials", "500")
        assert doc["config"]["seed"] == 11
        _, doc = run_json(tmp_path, "lipschitz", "--trials", "500", "--seed", "3")
        assert doc["config"]["seed"] == 3

    def test_bad_env_seed(self, monkeypatch):
        monkeypatch.setenv("MEANFIX_SEED", "x")
        assert main(["lipschitz", "--trials", "10"]) == 2


class TestConfigErrors:
    @pytest.mark.parametrize("argv", [
        ["examples", "verify", "--example", "nope"],
        ["afps", "run", "--alpha", "0.5,0.4"],
        ["afps", "run", "--alpha", "0,1"],
        ["afps", "run", "--lambda", "1.5"],
        ["lipschitz", "--dim", "2"],
        ["conditions", "sweep", "--step", "0.3"],
    ])
    def test_exit_two(self, argv, capsys):
        assert main(argv) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_argparse_usage_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["afps", "run", "--scheme", "newton"])
        assert exc.value.code == 2


class TestSweep:
    def test_n2_boundary(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["conditions", "sweep", "--out", str(out)]) == 0
        cfg, rows = read_csv(out)
        assert cfg["config"] == {"n": 2, "p": 1.0, "step": 0.01}
        header = rows[0]
        assert header == ["alpha1", "alpha2", "p", "condition_id", "verdict", "lhs", "rhs"]
        for r in rows[1:]:
            if r[3] == "gjp2":
                assert (r[4] == "1") == (float(r[0]) >= 0.5)

    def test_n3_json(self, tmp_path):
        code, doc = run_json(tmp_path, "conditions", "sweep", "--n", "3", "--format", "json")
        assert code == 0
        for r in doc["rows"]:
            if r["condition_id"] == "n3" and r["alpha"][0] >= math.sqrt(2) / 2:
                assert r["verdict"]


class TestLipschitzAndWitness:
    def test_lipschitz(self, tmp_path):
        code, doc = run_json(tmp_path, "lipschitz", "--trials", "20000")
        assert code == 0
        est = doc["estimates"]
        assert est["T"]["k_hat"] <= 2 + 1e-6 and est["tau_alpha"]["k_hat"] <= 1 + 1e-9
        assert doc["tau_alpha_nonexpansive_evidence"]

    def test_witness_found(self, tmp_path):
        _, doc = run_json(tmp_path, "witness", "--example", "ex2-l2")
        assert doc["witness"]["ratio"] >= 1.2

    def test_witness_none_for_identity(self, tmp_path):
        _, doc = run_json(tmp_path, "witness", "--example", "identity", "--trials", "500")
        assert doc["witness"] is None


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "meanfix", "conditions", "sweep", "--step", "0.25"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "gjp2" in r.stdout
