import csv
import json

import numpy as np
import pytest

from warpcurv.cli import canonical_json, main

TANH = ["--n", "3", "--y0", "0,0", "--p0", "-6,-6", "--t0", "0"]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


class TestIntegrate:
    def test_tanh_example(self, tmp_path):
        code, out = run(tmp_path, "integrate", *TANH, "--span", "-10,10")
        assert code == 0
        header, data = read_csv(out)
        assert header == ["t", "y_2", "y_3", "p_2", "p_3", "s", "mu_1", "mu_2", "mu_3"]
        assert data.shape == (512, 9)
        assert np.max(np.abs(data[:, 5] + 24)) <= 1e-8
        assert data[0, 0] == -10 and data[-1, 0] == 10

    def test_zero_trajectory(self, tmp_path):
        code, out = run(tmp_path, "integrate", "--n", "3", "--y0", "0,0", "--p0", "0,0", "--samples", "16")
        assert code == 0
        _, data = read_csv(out)
        assert data.shape == (16, 9) and np.all(data[:, 1:] == 0)

    def test_equals_form_and_negative_values(self, tmp_path):
        a = run(tmp_path, "integrate", "--n=3", "--y0=0,0", "--p0=-6,-6", "--samples=8", name="a")[1]
        b = run(tmp_path, "integrate", "--n", "3", "--y0", "0,0", "--p0", "-6,-6", "--samples", "8", name="b")[1]
        assert a.read_bytes() == b.read_bytes()

    def test_metric_table(self, tmp_path):
        code, out = run(tmp_path, "metric", "--n", "2", "--y0", "0", "--p0", "1", "--span", "-1,1", "--samples", "9")
        assert code == 0
        header, data = read_csv(out)
        assert header == ["t", "g_22"]
        np.testing.assert_allclose(data[:, 1], np.cos(data[:, 0]) ** 2, atol=1e-8)


class TestReports:
    def test_phase_lin(self, tmp_path):
        code, out = run(tmp_path, "phase", "lin", "--n", "4", "--q", "-2")
        assert code == 0
        body = json.loads(out.read_text())
        assert body["schema_version"] == "1"
        np.testing.assert_allclose(body["eigenvalues"], [-8, -6, -6, -2, -2, 0], atol=1e-10)

    def test_verify(self, tmp_path):
        code, out = run(tmp_path, "verify", "--n", "3", "--y0", "1,-0.5", "--p0", "0.7,1.2", "--span", "-0.3,0.3")
        body = json.loads(out.read_text())
        assert code == 0 and body["passed"] and all(body["checks"].values())

    def test_classify(self, tmp_path):
        code, out = run(tmp_path, "classify", "--n", "4", "--y0", "1,2,3", "--p0", "0.5,-1,0.25", "--span", "-0.2,0.2")
        body = json.loads(out.read_text())
        assert code == 0 and body["command"] == "classify" and body["ricci_generic"] and body["not_conformally_flat"]

    def test_appendix_construction(self, tmp_path):
        code, out = run(tmp_path, "appendix", "--n", "3", "--y0", "1,-0.5", "--p0", "0.7,1.2", "--span", "-0.2,0.2")
        body = json.loads(out.read_text())
        assert code == 0 and body["passed"] and body["source"] == "construction"

    def test_appendix_spec_file(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(
            json.dumps(
                {
                    "base": {"kind": "interval", "dim": 1},
                    "fiber": {"kind": "sphere2", "dim": 2},
                    "warping": {"kind": "cosh", "params": {"w": [0.5], "c": 0.1}},
                    "name": "demo",
                }
            )
        )
        code, out = run(tmp_path, "appendix", "--spec", str(spec), "--points", "2")
        body = json.loads(out.read_text())
        assert code == 0 and body["source"] == "demo" and body["conditions"]["points"] == 2

    def test_moduli_lines(self, tmp_path):
        code, out = run(tmp_path, "moduli", "--n", "3", "--count", "3", "--seed", "4", "--horizon", "5")
        lines = out.read_text().splitlines()
        assert code == 0 and len(lines) == 3
        assert all(json.loads(line)["schema_version"] == "1" for line in lines)

    def test_stdout(self, capsys):
        assert main(["phase", "lin", "--n", "3", "--q", "1"]) == 0
        assert json.loads(capsys.readouterr().out)["ok"]


class TestConfig:
    def test_config_and_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 3, "q": 1.0}))
        body = json.loads(run(tmp_path, "phase", "lin", "--config", str(cfg))[1].read_text())
        np.testing.assert_allclose(body["eigenvalues"], [0, 1, 2, 3], atol=1e-10)
        body = json.loads(run(tmp_path, "phase", "lin", "--config", str(cfg), "--q", "2")[1].read_text())
        np.testing.assert_allclose(body["eigenvalues"], [0, 2, 4, 6], atol=1e-10)

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 3, "q": 1.0, "colour": "red"}))
        code, out = run(tmp_path, "phase", "lin", "--config", str(cfg))
        assert code == 1 and not out.exists()


class TestFailures:
    @pytest.mark.parametrize(
        "argv",
        [
            ["integrate", "--n", "3", "--y0", "0", "--p0", "0,0"],
            ["integrate", "--n", "3", "--y0", "0,0", "--p0", "0,x"],
            ["integrate", *TANH, "--span", "1,2"],
            ["integrate", *TANH, "--tol", "0.5"],
            ["integrate", *TANH, "--samples", "0"],
            ["phase", "lin", "--n", "2", "--q", "1"],
            ["phase", "lin", "--n", "3.5", "--q", "1"],
            ["phase", "basin", "--epsilon", "-1"],
            ["moduli", "--box", "1"],
        ],
    )
    def test_validation_exit_and_no_file(self, tmp_path, argv, capsys):
        code, out = run(tmp_path, *argv)
        assert code == 1 and not out.exists()
        assert "error" in capsys.readouterr().err
        assert list(tmp_path.iterdir()) == []

    @pytest.mark.parametrize("argv", [["frobnicate"], ["integrate", "--colour", "red"], ["phase"], []])
    def test_usage_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_experiment_failure_exit(self, tmp_path):
        # far from the basin center not every sample converges
        code, out = run(
            tmp_path, "phase", "basin", "--epsilon", "20", "--count", "4", "--horizon", "5", "--require-all"
        )
        assert code == 2 and out.exists()


def test_canonical_json():
    assert canonical_json({"b": 1.0, "a": [np.float64(0.1), True, None, np.inf]}) == '{"a":[0.10000000000000001,true,null,null],"b":1}'
