import subprocess
import sys

import pytest

from losdivert.cli import main

TINY = ["--reps", "2", "--horizon", "2", "--warmup", "1", "--jobs", "1"]


def test_run_writes_reports(tmp_path, capsys):
    out = tmp_path / "out"
    trace = tmp_path / "trace.log"
    code = main(["run", "table1.cfg", "--policy", "none", *TINY, "--out", str(out),
                 "--trace", str(trace)])
    assert code == 0
    csv_text = (out / "report.csv").read_text()
    assert csv_text.splitlines()[0] == "outcome,none_mean,none_sd"
    assert "beta,0.000000,0.000000" in csv_text
    assert (out / "summary.txt").read_text().startswith("config ")
    assert trace.read_text().startswith("none\t0\t")
    assert "D_los" in capsys.readouterr().out


def test_run_is_byte_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "table3.cfg", "--policy", "predicted", *TINY, "--seed", "3",
                     "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_run_set_override(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "table1.cfg", "--policy", "none", *TINY, "--out", str(out),
                 "--set", "facility.phc1.interarrival=30"]) == 0


@pytest.mark.parametrize("args", [
    ["run", "missing.cfg"],
    ["run", "table1.cfg", "--warmup", "400"],
    ["run", "table1.cfg", "--set", "nodot=1"],
    ["run", "table1.cfg", "--set", "scenario.seed=-3"],
    ["run", "table1.cfg", "--jobs", "0"],
])
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "error:" in capsys.readouterr().err


def test_io_error_exit_4(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    assert main(["run", "table1.cfg", "--policy", "none", *TINY, "--out", str(blocker / "x")]) == 4
    assert str(blocker) in capsys.readouterr().err


def test_validate_passes_and_prints_gap_table(capsys):
    assert main(["validate", "--customers", "100000", "--little-days", "20"]) == 0
    out = capsys.readouterr().out
    assert "mean gap" in out and "all 4 checks passed" in out


def test_validate_fails_with_sabotaged_tolerance(capsys):
    assert main(["validate", "--customers", "20000", "--pk-tol", "1e-9", "--little-days", "5"]) == 3
    assert "Pollaczek-Khinchine" in capsys.readouterr().err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "losdivert", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("losdivert ")
