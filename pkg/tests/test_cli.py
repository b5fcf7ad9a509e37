import csv
import json

import pytest

from vdilution.cli import build_parser, main


def write_config(tmp_path, **fields):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(fields))
    return path


def test_parser_lists_all_subcommands():
    text = build_parser().format_help()
    for cmd in ("mse-sweep", "delay-sweep", "tables", "hellinger", "special-case", "verify"):
        assert cmd in text


def test_mse_sweep_writes_csv_and_sidecar(tmp_path, capsys):
    cfg = write_config(tmp_path, channel="pauli", n_grid=[2], M_grid=[1, 2], eps_grid=[0.01], samples=4)
    out = tmp_path / "out"
    assert main(["mse-sweep", "--config", str(cfg), "--out", str(out), "--seed", "3", "--gnuplot"]) == 0
    with open(out / "mse_sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["M"] for r in rows] == ["1", "2"]
    assert json.loads((out / "mse_sweep.json").read_text())["seed"] == 3
    assert (out / "mse_sweep.gp").exists()
    assert "wrote" in capsys.readouterr().out


def test_explicit_csv_path_and_samples_override(tmp_path):
    cfg = write_config(tmp_path, channel="loss", n_grid=[2], eps_grid=[0.02], samples=50)
    target = tmp_path / "sweep.csv"
    assert main(["mse-sweep", "--config", str(cfg), "--out", str(target), "--samples", "2"]) == 0
    meta = json.loads((tmp_path / "sweep.json").read_text())
    assert meta["config"]["samples"] == 2


def test_delay_sweep_and_hellinger(tmp_path):
    cfg = write_config(tmp_path, decay={"kind": "depol", "gamma": 0.002}, tau_grid=[0.0, 5.0], n_grid=[2],
                       M_grid=[2], L_err_grid=[1, 2], circuit="hardware_efficient", total_layers=2, samples=2)
    assert main(["delay-sweep", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "delay_sweep.csv").exists()
    cfg = write_config(tmp_path, channel="loss", circuit="product", n_grid=[2], eps_grid=[0.1], samples=2)
    assert main(["hellinger", "--config", str(cfg), "--out", str(tmp_path / "h")]) == 0
    with open(tmp_path / "h" / "hellinger.csv") as fh:
        row = next(csv.DictReader(fh))
    assert abs(float(row["hellinger_mean"]) - float(row["closed_form_exact"])) <= 1e-10


def test_tables_and_special_case(tmp_path, capsys):
    assert main(["tables", "--samples", "20", "--out", str(tmp_path / "t")]) == 0
    assert (tmp_path / "t" / "table_pauli_rhoTT.csv").exists()
    assert main(["special-case", "--samples", "5", "--eps0", "0.2", "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "special_case.csv").exists()


def test_config_errors_exit_with_code_2(tmp_path, capsys):
    cfg = write_config(tmp_path, channel="loss", n_grid=[6])
    assert main(["mse-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "extended" in capsys.readouterr().err
    cfg = write_config(tmp_path, chanel="loss")
    assert main(["mse-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["verify", "--only", "C5", "--override-tol", "C5", "--out", str(tmp_path)]) == 2


def test_verify_passes_and_reports_runtime(tmp_path, capsys):
    assert main(["verify", "--only", "C5,C9,C12", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["all_passed"] and report["failed"] == []
    assert all("runtime_s" in c for c in report["criteria"])
    assert [c["id"] for c in report["criteria"]] == ["C5", "C9", "C12"]
    assert "PASS" in capsys.readouterr().out


def test_verify_injected_tolerance_names_failing_criterion(tmp_path, capsys):
    code = main(["verify", "--only", "C5", "--override-tol", "C5=0", "--no-determinism", "--out", str(tmp_path)])
    assert code == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "failed: C5" in out
    assert json.loads((tmp_path / "verify_report.json").read_text())["failed"] == ["C5"]


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        main(["plot"])
