import io
import subprocess
import sys
from pathlib import Path

import pytest

from peakshave import cli
from peakshave.exceptions import NumericalFailure

GOLDEN = Path(__file__).parent / "fixtures" / "golden"
CONFIG = str(GOLDEN / "golden.ini")


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def test_cr_golden():
    code, text = run("cr", CONFIG)
    assert code == 0
    assert text == (GOLDEN / "cr.txt").read_text()


def test_simulate_golden(tmp_path):
    outputs = []
    for k in range(2):
        path = tmp_path / f"sim{k}.csv"
        code, summary = run("simulate", CONFIG, "--synthetic", "4", "--seed", "9", "--format", "csv",
                            "--out", str(path))
        assert code == 0
        assert summary == (GOLDEN / "simulate_summary.txt").read_text()
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] == (GOLDEN / "simulate.csv").read_bytes()


def test_simulate_json_to_stdout(capsys):
    code, _ = run("simulate", CONFIG, "--synthetic", "1", "--seed", "2")
    assert code == 0
    assert '"rows"' in capsys.readouterr().out


def test_trace_gen_golden(tmp_path):
    path = tmp_path / "t.csv"
    code, _ = run("trace-gen", CONFIG, "-n", "3", "--seed", "5", "--out", str(path))
    assert code == 0
    assert path.read_bytes() == (GOLDEN / "traces.csv").read_bytes()


def test_simulate_from_generated_traces(tmp_path):
    path = tmp_path / "t.csv"
    run("trace-gen", CONFIG, "-n", "2", "--seed", "5", "--out", str(path))
    code, summary = run("simulate", CONFIG, "--traces", str(path), "--out", str(tmp_path / "r.json"))
    assert code == 0 and "offline" in summary


def test_oracle_writes_fixtures(tmp_path):
    path = tmp_path / "derived.json"
    code, _ = run("oracle", CONFIG, "--out", str(path))
    assert code == 0
    import json

    data = json.loads(path.read_text())
    assert data["offline"][0]["reduction"] == 3.5


@pytest.mark.parametrize("argv", [[], ["bogus"], ["cr"], ["trace-gen", CONFIG, "--out", "x.csv"],
                                  ["simulate", CONFIG, "--format", "xml"]])
def test_usage_errors(argv):
    assert run(*argv)[0] == cli.EXIT_USAGE


def test_data_errors(tmp_path):
    assert run("cr", str(tmp_path / "missing.ini"))[0] == cli.EXIT_DATA
    bad = tmp_path / "bad.ini"
    bad.write_text("T = 0\nd_lb = 1\nd_ub = 2\n")
    assert run("cr", str(bad))[0] == cli.EXIT_DATA
    trace = tmp_path / "t.csv"
    trace.write_text("timestamp,demand_kwh\n2024-01-01T18:00:00,oops\n")
    assert run("simulate", CONFIG, "--traces", str(trace))[0] == cli.EXIT_DATA


def test_numerical_failure_exit_code(monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalFailure("pivot too small")

    monkeypatch.setattr(cli, "optimal_cr", boom)
    assert run("cr", CONFIG)[0] == cli.EXIT_NUMERICAL


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "peakshave", "cr", CONFIG], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "cr.txt").read_text()
