import csv
import io
import json
import subprocess
import sys

import pytest

from neumann_homotopy.cli import Report, emit_report, main, read_config_file, render, resolve_config, ConfigError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(body))))


class TestReports:
    def test_header_only_csv(self):
        text = render(Report("condition", {}, {}, ["n", "alpha", "u1", "phi_prime_inf"], []), "csv")
        assert csv_rows(text) == [["n", "alpha", "u1", "phi_prime_inf"]]
        assert text.endswith("\n") and "\r" not in text

    def test_json_schema_and_floats(self):
        rep = Report("x", {"a": 0.1}, {"nan": float("nan"), "flag": True}, ["v"], [[1 / 3]])
        data = json.loads(render(rep, "json"))
        assert data["schema"] == 1 and data["summary"] == {"nan": None, "flag": True}
        assert data["rows"][0][0] == 1 / 3
        assert "0.33333333333333331" in render(rep, "json")

    def test_csv_quoting(self):
        text = render(Report("x", {}, {}, ["msg"], [['a, "b"']]), "csv")
        assert csv_rows(text)[1] == ['a, "b"']

    def test_emit_to_file(self, tmp_path):
        path = emit_report(Report("x", {}, {}, ["v"], [[1.0]]), "csv", str(tmp_path / "sub" / "r.csv"))
        assert path.read_text().splitlines()[-1] == "1"

    def test_emit_bad_format(self):
        with pytest.raises(ConfigError):
            emit_report(Report("x", {}, {}, [], []), "xml")


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# comment\np = 2\nq = 5\nn = 40\nalpha = 3\n")
        cfg = resolve_config("oracle", read_config_file(str(f)), {"alpha": 2.0, "q": None})
        assert cfg["p"] == 2.0 and cfg["q"] == 5.0 and cfg["n"] == [40] and cfg["alpha"] == 2.0

    def test_json_file(self, tmp_path):
        f = tmp_path / "run.json"
        f.write_text(json.dumps({"p": 2, "q": 3, "n": "10,20", "alpha-interval": "2:0.5"}))
        cfg = resolve_config("condition", read_config_file(str(f)), {})
        assert cfg["n"] == [10, 20] and cfg["alpha_interval"] == [0.5, 2.0]

    @pytest.mark.parametrize("file_cfg", [
        {"p": 2},
        {"p": 2, "q": 3, "n": "1"},
        {"p": 2, "q": 3, "alpha": "-1"},
        {"p": 2, "q": 3, "bogus": 1},
        {"p": 2, "q": 3, "alpha_interval": "1"},
        {"p": "two", "q": 3},
    ])
    def test_invalid(self, file_cfg):
        with pytest.raises(ConfigError):
            resolve_config("solve", file_cfg, {})

    def test_bad_lines(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("p 2\n")
        with pytest.raises(ConfigError):
            read_config_file(str(f))


class TestCommands:
    def test_solve_json(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--p", "2", "--q", "3", "--n", "100", "--alpha", "1",
                               "--eps", "1e-12", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["command"] == "solve"
        assert len(data["rows"]) == 100 and data["columns"] == ["k", "x", "u"]
        assert data["summary"]["residual"] <= 1e-12 and data["summary"]["bounds_ok"]
        assert data["config"]["pair"] == {"kind": "power-law", "p": 2.0, "q": 3.0}
        assert "elapsed_s" not in data["summary"]

    def test_oracle(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "--p", "2", "--q", "3", "--n", "50")
        rows = csv_rows(out)
        assert code == 0 and rows[0] == ["k", "x", "u", "u_prime"]
        assert float(rows[1][2]) == pytest.approx(0.54873159876856896534, rel=1e-13)

    def test_condition(self, capsys):
        code, out, _ = run_cli(capsys, "condition", "--p", "2", "--q", "3", "--n", "1000,10,100",
                               "--alpha-interval", "0.5:2", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["columns"][:4] == ["n", "alpha", "u1", "phi_prime_inf"]
        assert [r[0] for r in data["rows"][::33]] == [10, 100, 1000]
        assert data["summary"]["relative_spread"] < 0.05

    def test_convergence_table(self, capsys):
        code, out, _ = run_cli(capsys, "convergence-table", "--p", "2", "--q", "3", "--n", "25", "--alpha", "1")
        rows = csv_rows(out)
        assert code == 0 and [r[0] for r in rows[1:]] == ["25", "49", "97"]
        assert float(rows[-1][-1]) == pytest.approx(4.0, abs=0.01)

    def test_path(self, capsys):
        code, out, _ = run_cli(capsys, "path", "--p", "2", "--q", "3", "--n", "30", "--samples", "5", "--format", "json")
        data = json.loads(out)
        assert code == 0 and len(data["rows"]) == 5 and all(r[5] for r in data["rows"])

    def test_dynamics_probes(self, capsys):
        code, out, _ = run_cli(capsys, "dynamics", "--p", "2", "--q", "3", "--n", "50", "--probes", "3",
                               "--seed", "7", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["summary"]["all_agree"] and len(data["rows"]) == 3

    def test_constants(self, capsys):
        code, out, _ = run_cli(capsys, "constants", "--p", "2", "--q", "3", "--n", "30", "--alpha", "10",
                               "--samples", "4", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["summary"]["k0"] == 5 and len(data["rows"]) == 4

    def test_named_pair(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "--pair", "cubic-exp", "--n", "20")
        assert code == 0


class TestExitCodes:
    def test_config_error(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--p", "2", "--n", "10")
        assert code == 2 and "config error" in err

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "solve", "--config", str(tmp_path / "none.cfg"))
        assert code == 2

    def test_solver_failure(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--p", "2", "--q", "3", "--n", "100", "--schedule", "theoretical")
        assert code == 3 and "beta" in err

    def test_validation_failure(self, capsys):
        code, _, err = run_cli(capsys, "oracle", "--p", "1.5", "--q", "3", "--n", "10")
        assert code == 4 and "g1'''" in err

    def test_swapped_exponents(self, capsys):
        code, _, _ = run_cli(capsys, "oracle", "--p", "3", "--q", "2", "--n", "10")
        assert code == 4


class TestDeterminism:
    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["dynamics", "--p", "2", "--q", "3", "--n", "30", "--probes", "2", "--seed", "3", "--format", "json"]
        assert main(args + ["-o", str(a)]) == 0
        assert main(args + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_outdir_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("NEUMANN_HOMOTOPY_OUTDIR", str(tmp_path))
        assert main(["oracle", "--p", "2", "--q", "3", "--n", "5", "--format", "json"]) == 0
        assert json.loads((tmp_path / "oracle.json").read_text())["schema"] == 1

    def test_timing_opt_in(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--p", "2", "--q", "3", "--n", "20", "--format", "json",
                               "--include-timing")
        assert code == 0 and json.loads(out)["summary"]["elapsed_s"] > 0

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "neumann_homotopy", "oracle", "--p", "2", "--q", "3", "--n", "5"],
                             capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.startswith("# command: oracle")
