"""Config validation, table generation and exit codes of the batch CLI."""

import csv
import json
import math

import pytest

from lsrx.cli import main, run
from lsrx.errors import ConfigError

DIST_FLAT = {"kind": "point_masses", "values": [1.0], "weights": [1.0]}
DIST_EXP = {"kind": "exponential", "mean": 1.0}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestRunCommand:
    def test_mmse_roundtrip(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "mmse",
            "params": {"alpha": 0.5, "beta": 1.0, "sigma2": 0.1, "s_type": "iid",
                       "dist_p": DIST_FLAT, "dist_h": DIST_FLAT},
            "output": str(tmp_path / "out" / "m"), "format": "csv"})
        files = run(cfg)
        header, rows = read_csv(files[0])
        sinr = float(rows[0][header.index("sinr")])
        assert sinr == pytest.approx(5.7417, abs=5e-4)
        meta = json.loads((tmp_path / "out" / "m.meta.json").read_text())
        assert meta["config"]["command"] == "mmse"
        assert "lsrx" in meta["versions"]

    def test_floats_have_17_significant_digits(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "mmse",
            "params": {"alpha": 0.5, "beta": 1.0, "sigma2": 0.1,
                       "dist_p": DIST_FLAT, "dist_h": DIST_FLAT},
            "output": str(tmp_path / "m")})
        files = run(cfg)
        header, rows = read_csv(files[0])
        val = rows[0][header.index("rho1")]
        assert float(val) == pytest.approx(5.741657386773831, abs=1e-12)
        assert len(val.replace(".", "").replace("-", "").lstrip("0")) >= 16

    def test_als_sweep_four_combinations(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "als-sweep",
            "params": {"alpha": 0.5, "beta": 1.0, "sigma2": 0.1, "mu": 0.1,
                       "dist_p": DIST_FLAT, "dist_h": DIST_EXP,
                       "etas": [2.0, 4.0]},
            "output": str(tmp_path / "sweep")})
        header, rows = read_csv(run(cfg)[0])
        assert header == ["s_type", "b_type", "eta", "sinr_db_training",
                          "sinr_db_semiblind", "sinr_db_mmse"]
        combos = {(r[0], r[1]) for r in rows}
        assert len(combos) == 4 and len(rows) == 8
        for r in rows:
            assert float(r[3]) <= float(r[5]) + 1e-9  # training below exact MMSE

    def test_relation_steady_table(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "relation",
            "params": {"betas": [0.5, 1.0], "lbars": [1.0, 5.0],
                       "window": "exponential", "etas": "inf"},
            "output": str(tmp_path / "zeta")})
        header, rows = read_csv(run(cfg)[0])
        assert len(rows) == 4
        row = [r for r in rows if r[0] == "1" and r[2] == "1"][0]
        assert float(row[3]) == pytest.approx(1.0 / (1.0 - math.exp(-1.0)), abs=1e-10)
        assert float(row[4]) == pytest.approx(1.5)

    def test_simulate_summary(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "simulate",
            "params": {"preset": {"kind": "rich_mimo"}, "n": 16, "alpha": 0.5,
                       "beta": 1.0, "eta": 2.0, "sigma2": 0.1, "trials": 3,
                       "receiver": "mmse", "seed": 5},
            "output": str(tmp_path / "sim")})
        files = run(cfg)
        header, rows = read_csv(files[0])
        assert header == ["trial", "stream", "sinr_db_empirical",
                          "sinr_db_asymptotic"]
        assert len(rows) == 3 * 8
        meta = json.loads((tmp_path / "sim.meta.json").read_text())
        assert meta["summary"]["trials"] == 3
        assert meta["seed"] is None

    def test_seed_override(self, tmp_path):
        payload = {
            "command": "simulate",
            "params": {"preset": {"kind": "rich_mimo"}, "n": 16, "alpha": 0.5,
                       "beta": 1.0, "eta": 2.0, "sigma2": 0.1, "trials": 2,
                       "receiver": "mmse", "seed": 5},
            "output": str(tmp_path / "s1")}
        cfg = write_config(tmp_path, payload)
        run(cfg)
        a = read_csv(str(tmp_path / "s1.csv"))[1]
        payload["output"] = str(tmp_path / "s2")
        cfg = write_config(tmp_path, payload, "cfg2.json")
        run(cfg, seed=99)
        b = read_csv(str(tmp_path / "s2.csv"))[1]
        assert a != b

    def test_json_format(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "relation",
            "params": {"betas": [1.0], "lbars": [2.0], "window": "exponential"},
            "output": str(tmp_path / "zj"), "format": "json"})
        files = run(cfg)
        rows = json.loads((tmp_path / "zj.json").read_text())
        assert rows[0]["beta"] == 1.0


class TestValidation:
    def test_unknown_field_rejected(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "mmse",
            "params": {"alpha": 0.5, "beta": 1.0, "sigma2": 0.1,
                       "dist_p": DIST_FLAT, "dist_h": DIST_FLAT, "bogus": 1},
            "output": str(tmp_path / "m")})
        with pytest.raises(ConfigError, match="bogus"):
            run(cfg)

    def test_unknown_command(self, tmp_path):
        cfg = write_config(tmp_path, {"command": "nope", "params": {},
                                      "output": str(tmp_path / "x")})
        with pytest.raises(ConfigError):
            run(cfg)

    def test_sigma2_and_snr_exclusive(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "mmse",
            "params": {"alpha": 0.5, "beta": 1.0, "sigma2": 0.1, "snr_db": 10,
                       "dist_p": DIST_FLAT, "dist_h": DIST_FLAT},
            "output": str(tmp_path / "m")})
        with pytest.raises(ConfigError):
            run(cfg)


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "command": "relation",
            "params": {"betas": [1.0], "lbars": [2.0], "window": "exponential"},
            "output": str(tmp_path / "ok")})
        assert main(["run", "--config", cfg]) == 0

    def test_malformed_json_is_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 3
        assert not (tmp_path / "x.csv").exists()

    def test_solver_failure_exit_code(self, tmp_path, capsys):
        # eta <= beta with mu = 0 is ill posed -> config/domain error class
        cfg = write_config(tmp_path, {
            "command": "als",
            "params": {"alpha": 0.5, "beta": 1.0, "eta": 0.5, "sigma2": 0.1,
                       "mu": 0.0, "dist_p": DIST_FLAT, "dist_h": DIST_FLAT},
            "output": str(tmp_path / "x")})
        assert main(["run", "--config", cfg]) == 3
