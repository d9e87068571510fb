"""Tests for configuration parsing and the batch driver."""

import csv
import io

import numpy as np
import pytest

from tsallis_qlab.cli import (
    ConfigError,
    format_value,
    int_list,
    main,
    parse_config,
    parse_config_file,
    parse_rho,
)
from tsallis_qlab.linalg import tsallis_exact


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParsing:
    def test_defaults(self, tmp_path):
        cfg_file = tmp_path / "empty.cfg"
        cfg_file.write_text("# nothing here\n\n")
        cfg = parse_config("estimate", parse_config_file(cfg_file, "estimate"), {})
        assert cfg.values["q"] == "2" and cfg.values["trials"] == "200"

    def test_flag_overrides_file_with_warning(self, tmp_path):
        cfg_file = tmp_path / "a.cfg"
        cfg_file.write_text("q = 4\neps = 0.05\n")
        warnings = []
        cfg = parse_config("estimate", parse_config_file(cfg_file, "estimate"), {"q": "3"},
                           warn=warnings.append)
        assert cfg.values["q"] == "3" and cfg.values["eps"] == "0.05"
        assert len(warnings) == 1 and "--q" in warnings[0]

    def test_unknown_key_names_line(self, tmp_path):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("q = 3\ncolour = red\n")
        with pytest.raises(ConfigError, match=r"bad\.cfg:2: unknown key 'colour'"):
            parse_config_file(cfg_file, "estimate")

    def test_malformed_line(self, tmp_path):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("q 3\n")
        with pytest.raises(ConfigError, match=":1:"):
            parse_config_file(cfg_file, "estimate")

    @pytest.mark.parametrize("key,value,match", [
        ("trials", "0", "trials"),
        ("eps", "0.9", "eps"),
        ("method", "magic", "method"),
        ("mode", "fast", "mode"),
        ("q", "1", "q"),
        ("rho", "diag:0.9,0.2", "rho"),
    ])
    def test_invalid_values_name_key(self, key, value, match):
        with pytest.raises(ConfigError, match=match):
            parse_config("estimate", {}, {key: value})

    def test_int_list_ranges(self):
        assert int_list("q", "2:4,7") == [2, 3, 4, 7]
        with pytest.raises(ConfigError):
            int_list("q", "5:2")


class TestRhoLiterals:
    def test_pure(self):
        assert tsallis_exact(parse_rho("pure"), 2) == pytest.approx(0)
        assert parse_rho("pure:2").n_qubits == 2

    def test_maxmixed(self):
        assert np.allclose(parse_rho("maxmixed:2").matrix, np.eye(4) / 4)

    def test_diag_fractions(self):
        assert np.allclose(np.diag(parse_rho("diag:2/3,1/3").matrix).real, [2 / 3, 1 / 3])

    def test_random(self):
        assert np.array_equal(parse_rho("random:2:5").matrix, parse_rho("random:2:5").matrix)

    @pytest.mark.parametrize("text", ["diag:0.9,0.2", "mixed", "diag:a,b"])
    def test_rejected(self, text):
        with pytest.raises(ConfigError, match="rho"):
            parse_rho(text)


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.float64(1 / 3)) == "0.33333333333333331"
    assert format_value(True) == "1"
    assert format_value(float("nan")) == "nan"


class TestCommands:
    def test_estimate_example(self, tmp_path):
        out = tmp_path / "est.csv"
        assert main(["estimate", "--q", "3", "--eps", "0.1", "--rho", "diag:2/3,1/3",
                     "--trials", "200", "--seed", "7", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 200
        assert np.mean([int(r["success"]) for r in rows]) >= 0.6
        assert list(rows[0]) == ["method", "q", "eps", "trial", "estimate", "exact", "abs_err",
                                 "queries", "success", "seed"]

    def test_byte_determinism(self, tmp_path, monkeypatch):
        args = ["estimate", "--q", "2,4", "--eps", "0.05", "--rho", "random:1:3",
                "--trials", "30", "--seed", "11", "--method", "shift"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        monkeypatch.setenv("TSALLIS_QLAB_THREADS", "4")
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_degree_example(self, tmp_path):
        out = tmp_path / "deg.csv"
        assert main(["degree", "--q", "16,64,144", "--eps", "0.05", "--out", str(out),
                     "--plot", "true"]) == 0
        rows = read_csv(out)
        assert [int(r["q"]) for r in rows] == [16, 64, 144]
        assert all(float(r["floor"]) <= int(r["minimax"]) <= int(r["truncation"]) for r in rows)
        svg = out.with_suffix(".svg")
        first = svg.read_bytes()
        assert first.startswith(b"<?xml")
        main(["degree", "--q", "16,64,144", "--eps", "0.05", "--out", str(out), "--plot", "true"])
        assert svg.read_bytes() == first

    def test_poly_example(self, capsys):
        assert main(["poly", "--q", "100", "--eps", "0.01"]) == 0
        (row,) = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert float(row["sup_error"]) <= 0.01

    def test_sweep_with_plot(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--q", "2,3", "--eps", "0.1", "--trials", "10",
                     "--out", str(out), "--plot", "true"]) == 0
        rows = read_csv(out)
        assert "wall_time" not in rows[0]
        assert len(rows) == 4 and out.with_suffix(".svg").exists()

    def test_sweep_timing_column(self, tmp_path):
        out = tmp_path / "sweep.csv"
        main(["sweep", "--q", "2", "--eps", "0.1", "--trials", "5", "--timing", "true",
              "--out", str(out)])
        assert "wall_time" in read_csv(out)[0]

    def test_hardness(self, capsys):
        assert main(["hardness", "--q", "3:6"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 4
        assert all(float(r["gap"]) > float(r["gap_witness"]) for r in rows)

    def test_acceptance_single(self, capsys):
        assert main(["acceptance", "--criterion", "8"]) == 0
        assert "[PASS] criterion 8" in capsys.readouterr().err

    def test_invalid_config_exit(self, capsys):
        assert main(["estimate", "--rho", "diag:0.9,0.2"]) == 2
        assert "rho" in capsys.readouterr().err

    def test_budget_exit(self, capsys):
        code = main(["estimate", "--rho", "random:5:1", "--q", "4", "--eps", "0.05",
                     "--method", "shift", "--trials", "1"])
        assert code == 3
        assert "qubit budget" in capsys.readouterr().err

    def test_oversized_rho_is_budget_error(self, capsys):
        assert main(["estimate", "--rho", "random:20:1"]) == 3
        assert "qubit budget" in capsys.readouterr().err

    def test_plot_needs_file(self, capsys):
        assert main(["degree", "--q", "4", "--eps", "0.05", "--plot", "true"]) == 2
