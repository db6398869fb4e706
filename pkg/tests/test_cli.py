import subprocess
import sys

import pytest

from mimo_assoc.cli import build_parser, main
from mimo_assoc.experiments import read_csv

SMALL = ["--users", "6", "--antennas", "64"]


def test_powermin(tmp_path, capsys):
    assert main(["powermin", "--drops", "2", "--out", str(tmp_path), "--qos", "0.5", *SMALL]) == 0
    rows = read_csv(tmp_path / "powermin.csv")
    assert len(rows) == 2 * 2 * 2
    assert {r["association"] for r in rows} == {"optimal", "max_snr"}
    assert (tmp_path / "powermin.csv").read_text().startswith("# mimo_assoc")
    assert "wrote" in capsys.readouterr().out


def test_maxmin_single_scheme(tmp_path):
    assert main(["maxmin", "--scheme", "zf", "--out", str(tmp_path), *SMALL]) == 0
    rows = read_csv(tmp_path / "maxmin.csv")
    assert [r["scheme"] for r in rows] == ["zf"]
    assert {"seed", "M", "K", "xi_lower", "iterations", "total_power"} <= set(rows[0])


def test_coherent(tmp_path):
    assert main(["coherent", "--scheme", "mrt", "--out", str(tmp_path), *SMALL]) == 0
    row = read_csv(tmp_path / "coherent.csv")[0]
    assert row["scheme"] == "coherent-MRT"
    assert float(row["maxmin_xi_lower"]) > 0


def test_validate_se(tmp_path):
    assert main(["validate-se", "--samples", "500", "--out", str(tmp_path), "--antennas", "32",
                 "--users", "4"]) == 0
    assert (tmp_path / "validate_se_summary.csv").exists()


def test_sweep_with_config(tmp_path):
    cfg = tmp_path / "net.yaml"
    cfg.write_text("num_users: 6\npilot_length: 6\nmax_power: 20\n")
    out = tmp_path / "out"
    assert main(["sweep", "power_vs_antennas", "--config", str(cfg), "--drops", "2",
                 "--antennas", "32", "64", "--scheme", "mrt", "--out", str(out)]) == 0
    rows = read_csv(out / "power_vs_antennas.csv")
    assert {r["M"] for r in rows} == {"32", "64"}


def test_rejects_bad_input(tmp_path, capsys):
    assert main(["powermin", "--drops", "0", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep", "not_an_experiment"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["powermin", "--scheme", "mmse"])


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mimo_assoc", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "sweep" in out.stdout
