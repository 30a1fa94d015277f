import json
import math

import numpy as np
import pytest

from peakshave.core import ProblemInstance
from peakshave.exceptions import IoError, ParseError, ShortDay
from peakshave.harness.config import ConfigError, ExperimentConfig, load_config, parse_config
from peakshave.harness.experiment import (
    CSV_COLUMNS,
    Report,
    aggregate,
    emit_report,
    offline_to_online,
    read_report,
    run_experiment,
)
from peakshave.harness.traces import Episode, generate_synthetic, load_traces, synthetic_episodes, write_traces

from conftest import CONFIGS

BOUNDS = (442.91, 1020.10)


def _csv(tmp_path, rows, header="timestamp,demand_kwh"):
    path = tmp_path / "trace.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    return path


# config

def test_parse_minimal_config_defaults():
    cfg = parse_config("T = 4\nd_lb = 1\nd_ub = 9\n")
    assert cfg.instance.delta_max == 9.0
    assert cfg.window_start is None
    assert cfg.adaptive_method == "fractional"
    assert cfg.rhc_window == 5


def test_parse_section_and_lists():
    cfg = parse_config("[experiment]\nT=3\nd_lb=1\nd_ub=2\nc=0.5\npolicies = offline, pcr\n"
                       "capacity_rates = 0.1; 0.3\nwindow_start = 18:00  # evening\n")
    assert cfg.policies == ("offline", "pcr")
    assert cfg.capacity_rates == (0.1, 0.3)
    assert cfg.window_start == "18:00"
    assert cfg.instance.c == 0.5


@pytest.mark.parametrize("text", [
    "d_lb = 1\nd_ub = 2\n",
    "T = x\nd_lb = 1\nd_ub = 2\n",
    "T = 2\nd_lb = 1\nd_ub = 2\npolicies = magic\n",
    "T = 2\nd_lb = 1\nd_ub = 2\ncapacity_rates = 0, 0.5\n",
    "T = 2\nd_lb = 1\nd_ub = 2\ncapacity_rates = 1.5\n",
    "T = 2\nd_lb = 1\nd_ub = 2\nadaptive_method = guess\n",
    "T = 2\nd_lb = 1\nd_ub = 2\nepsilon = 0\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_shipped_configs_load():
    for path in CONFIGS.glob("*.ini"):
        assert load_config(path).window_start


# traces

def test_load_four_rows(tmp_path):
    rows = [f"2024-03-01T18:{m:02d}:00,{v}" for m, v in zip((0, 15, 30, 45), (5, 6, 7, 8))]
    eps = load_traces(_csv(tmp_path, rows), 4, 15, "18:00", (1, 10))
    assert len(eps) == 1 and eps[0].id == "2024-03-01"
    np.testing.assert_array_equal(eps[0].demands, [5, 6, 7, 8])


def test_clipping_is_counted(tmp_path):
    rows = ["2024-03-01T18:00:00,15", "2024-03-01T18:15:00,5"]
    eps = load_traces(_csv(tmp_path, rows), 2, 15, "18:00", (1, 10))
    assert eps[0].demands[0] == 10 and eps.clip_count == 1 and eps[0].clipped == 1


@pytest.mark.parametrize("rows,line", [
    (["2024-03-01T18:00:00,abc"], 2),
    (["2024-03-01T18:00:00,1", "not-a-time,1"], 3),
    (["2024-03-01T18:00:00,1,2"], 2),
    (["2024-03-01T18:00:00,nan"], 2),
])
def test_parse_errors_carry_row(tmp_path, rows, line):
    with pytest.raises(ParseError) as err:
        load_traces(_csv(tmp_path, rows), 1, 15, "18:00", (0, 10))
    assert err.value.row == line


def test_bad_header(tmp_path):
    with pytest.raises(ParseError):
        load_traces(_csv(tmp_path, ["2024-03-01T18:00:00,1"], header="time,kwh"), 1, 15, "18:00", (0, 10))


def test_short_days_skipped_or_raised(tmp_path):
    rows = ["2024-03-01T18:00:00,1", "2024-03-01T18:15:00,2", "2024-03-02T18:00:00,3"]
    eps = load_traces(_csv(tmp_path, rows), 2, 15, "18:00", (0, 10))
    assert [e.id for e in eps] == ["2024-03-01"] and eps.skipped == ["2024-03-02"]
    with pytest.raises(ShortDay):
        load_traces(_csv(tmp_path, rows), 2, 15, "18:00", (0, 10), strict=True)


def test_synthetic_is_deterministic_and_bounded():
    a = synthetic_episodes(20, BOUNDS, 30, seed=5)
    b = synthetic_episodes(20, BOUNDS, 30, seed=5)
    assert all(np.array_equal(x.demands, y.demands) for x, y in zip(a, b))
    D = np.vstack([e.demands for e in a])
    assert D.min() >= BOUNDS[0] and D.max() <= BOUNDS[1]
    assert synthetic_episodes(20, BOUNDS, 0, seed=5) == []
    assert not np.array_equal(D, np.vstack([e.demands for e in synthetic_episodes(20, BOUNDS, 30, seed=6)]))


def test_write_then_load_round_trip(tmp_path):
    eps = synthetic_episodes(8, BOUNDS, 3, seed=1)
    path = tmp_path / "t.csv"
    write_traces(eps, path, "17:30")
    back = load_traces(path, 8, 15, "17:30", BOUNDS)
    assert [e.id for e in back] == [e.id for e in eps]
    for x, y in zip(eps, back):
        np.testing.assert_allclose(x.demands, y.demands, atol=1e-4)


# experiment

def _config(**kw):
    inst = ProblemInstance(6, 100.0, 300.0, 100.0, 300.0)
    base = dict(instance=inst, policies=("offline", "adaptive"), capacity_rates=(0.1,), window_start="18:00")
    base.update(kw)
    return ExperimentConfig(**base)


def test_experiment_cardinality_and_ratios():
    cfg = _config()
    eps = synthetic_episodes(6, (100.0, 300.0), 2, seed=0)
    report = run_experiment(cfg, eps)
    assert len(report.rows) == 4 and len(report.aggregates) == 2
    pi_star = report.meta["rates"][0]["pi_star"]
    for r in report.rows:
        assert 0 <= r.reduction_rate <= 1
        if r.policy == "offline":
            assert r.ratio == 1.0
        else:
            assert r.ratio <= pi_star + cfg.epsilon
            assert r.ratio >= 1 - 1e-9


def test_experiment_full_policy_set():
    cfg = _config(policies=ExperimentConfig.__dataclass_fields__["policies"].default, capacity_rates=(0.05, 0.2))
    eps = synthetic_episodes(6, (100.0, 300.0), 3, seed=2)
    report = run_experiment(cfg, eps)
    assert len(report.rows) == 2 * 3 * 10
    assert all(r.feasible for r in report.rows)
    for rate in (0.05, 0.2):
        off = {r.episode: r.reduction_rate for r in report.rows_for("offline", rate)}
        for r in report.rows:
            if r.capacity_rate == rate:
                assert r.reduction_rate <= off[r.episode] + 1e-9
    # aggregates recompute from the rows
    for a, b in zip(report.aggregates, aggregate(report.rows)):
        assert a.mean_reduction_rate == pytest.approx(b.mean_reduction_rate, abs=1e-12)
    for a in report.aggregates:
        rates = [r.reduction_rate for r in report.rows_for(a.policy, a.capacity_rate)]
        assert a.mean_reduction_rate == pytest.approx(np.mean(rates), abs=1e-12)
        assert a.std_reduction_rate == pytest.approx(np.std(rates), abs=1e-12)


def test_degenerate_ratio_convention():
    assert offline_to_online(0.0, 0.0) == (1.0, True)
    assert offline_to_online(2.0, 0.0) == (math.inf, False)
    assert offline_to_online(3.0, 1.5) == (2.0, False)


def test_zero_demand_episode_is_flagged():
    cfg = _config(instance=ProblemInstance(4, 10.0, 5.0, 0.0, 50.0), policies=("offline", "pcr", "adaptive"))
    report = run_experiment(cfg, [Episode("idle", np.zeros(4)), Episode("busy", np.array([5.0, 20, 40, 10]))])
    idle = [r for r in report.rows if r.episode == "idle"]
    assert len(idle) == 3
    assert all(r.degenerate and r.ratio == 1.0 and r.reduction_rate == 0.0 for r in idle)
    assert not any(r.degenerate for r in report.rows if r.episode == "busy")


def test_empty_episode_list():
    report = run_experiment(_config(), [])
    assert report.rows == [] and report.aggregates == []


def test_emit_json_round_trip(tmp_path):
    report = run_experiment(_config(), synthetic_episodes(6, (100.0, 300.0), 2, seed=0))
    path = tmp_path / "r.json"
    emit_report(report, "json", path)
    back = read_report(path)
    assert back == report
    assert json.loads(path.read_text())["rows"][0]["policy"] == "offline"


def test_emit_csv_header_and_empty(tmp_path):
    path = tmp_path / "r.csv"
    emit_report(Report(), "csv", path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"
    report = run_experiment(_config(), synthetic_episodes(6, (100.0, 300.0), 2, seed=0))
    emit_report(report, "csv", path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS) and len(lines) == 5


def test_emit_errors(tmp_path):
    with pytest.raises(IoError):
        emit_report(Report(), "json", tmp_path / "missing" / "r.json")
    with pytest.raises(ValueError):
        emit_report(Report(), "xml", tmp_path / "r.xml")


def test_generate_synthetic_uses_config_seed():
    cfg = _config(seed=11)
    a = generate_synthetic(cfg, 2)
    b = generate_synthetic(cfg, 2, seed=11)
    assert np.array_equal(a[0].demands, b[0].demands)
