import json

import numpy as np

from fermigauss.cli import run


def read_report(path):
    return json.loads(path.read_text())


def strip_timestamp(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if '"timestamp"' not in line)


class TestExitCodes:
    def test_identities_pass(self, tmp_path):
        assert run(["identities", "--modes", "3", "--seed", "42", "--trials", "8"]) == 0

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run(["resolution", "--nope"]) == 2

    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 2

    def test_nc_failure_needs_two_modes(self, capsys):
        assert run(["number-conserving", "--variant", "failure", "--modes", "3"]) == 2

    def test_mc_with_determinant_weight_rejected(self):
        assert run(["resolution", "--mode", "mc", "--weight", "determinant"]) == 2


class TestReports:
    def test_quad_report_structure(self, tmp_path):
        out = tmp_path / "quad.json"
        code = run(
            ["resolution", "--mode", "quad", "--modes", "2", "-p", "1", "--seed", "7", "--out", str(out)]
        )
        assert code == 0
        doc = read_report(out)
        assert doc["command"] == "resolution"
        assert doc["passed"] is True
        assert doc["seed"] == {"seed": 7, "stream": 0}
        assert "git_describe" in doc and "timestamp" in doc
        crit = doc["criteria"][0]
        assert crit["passed"] is True
        measured = crit["measured"]
        assert measured["modes"] == 2 and measured["dimension"] == 4
        assert len(measured["entries"]) == 16
        assert all(len(pair) == 2 for pair in measured["entries"])

    def test_byte_identical_apart_from_timestamp(self, tmp_path):
        args = [
            "resolution", "--mode", "mc", "--modes", "1", "-p", "1",
            "--samples", "4000", "--seed", "3",
        ]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert run(args + ["--out", str(out1)]) == 0
        assert run(args + ["--out", str(out2)]) == 0
        assert strip_timestamp(out1.read_text()) == strip_timestamp(out2.read_text())
        assert out1.read_text() != "" and '"timestamp"' in out1.read_text()

    def test_worker_flag_does_not_change_results(self, tmp_path):
        base = ["resolution", "--mode", "mc", "--modes", "2", "--samples", "12000", "--seed", "5"]
        out1, out2 = tmp_path / "w1.json", tmp_path / "w2.json"
        assert run(base + ["--workers", "1", "--out", str(out1)]) == 0
        assert run(base + ["--workers", "3", "--out", str(out2)]) == 0
        d1, d2 = read_report(out1), read_report(out2)
        assert d1["criteria"][0]["measured"] == d2["criteria"][0]["measured"]

    def test_report_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FERMIGAUSS_REPORT_DIR", str(tmp_path))
        assert run(["selberg", "--consistency", "--max-modes", "3", "--out", "sub/report.json"]) == 0
        assert (tmp_path / "sub" / "report.json").exists()


class TestCsvDumps:
    def test_ensembles_dump_format(self, tmp_path):
        csv = tmp_path / "eig.csv"
        code = run(
            [
                "ensembles", "--dump-eigenvalues", "--symmetry-class", "D",
                "--weight", "gaussian", "-p", "1", "--modes", "2",
                "--samples", "500", "--seed", "3", "--csv", str(csv),
            ]
        )
        assert code == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "lambda_1,lambda_2"
        assert len(lines) == 501
        row = lines[1].split(",")
        assert len(row) == 2
        # 17 significant digits requested
        assert any(len(cell.replace("-", "").replace(".", "").lstrip("0")) >= 16 for cell in row)
        parsed = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
        assert np.isfinite(parsed).all()

    def test_mc_dump_matches_sampler(self, tmp_path):
        csv = tmp_path / "lams.csv"
        code = run(
            [
                "resolution", "--mode", "mc", "--modes", "1", "-p", "1",
                "--samples", "4000", "--seed", "11", "--csv", str(csv),
            ]
        )
        assert code == 0
        rows = csv.read_text().splitlines()
        assert rows[0] == "lambda_1"
        assert len(rows) == 4001

    def test_modified_dump(self, tmp_path):
        csv = tmp_path / "mod.csv"
        code = run(
            [
                "number-conserving", "--variant", "modified", "--modes", "2",
                "-p", "1", "--samples", "8000", "--seed", "2", "--csv", str(csv),
            ]
        )
        assert code == 0
        rows = csv.read_text().splitlines()
        assert rows[0] == "lambda_1,lambda_2"
        assert len(rows) >= 8001


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# resolution settings\n"
            "mode = mc\n"
            "modes = 1\n"
            "samples = 4000\n"
            "seed = 9\n"
        )
        out1 = tmp_path / "c1.json"
        assert run(["resolution", "--config", str(cfg), "--out", str(out1)]) == 0
        doc = read_report(out1)
        assert doc["parameters"]["modes"] == 1
        assert doc["parameters"]["samples"] == 4000
        assert doc["seed"]["seed"] == 9

        out2 = tmp_path / "c2.json"
        assert run(["resolution", "--config", str(cfg), "--modes", "2", "--out", str(out2)]) == 0
        assert read_report(out2)["parameters"]["modes"] == 2

    def test_missing_config_is_usage_error(self):
        assert run(["resolution", "--config", "/nonexistent/x.cfg"]) == 2

    def test_malformed_config_is_usage_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("modes 2\n")
        assert run(["resolution", "--config", str(cfg)]) == 2
