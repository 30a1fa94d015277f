"""Experiment orchestration and report emission.

For every capacity rate the storage capacity is set to ``rate`` times the
mean episode energy, the optimal competitive ratio is computed once, and
each configured policy is run on every episode.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..core import ProblemInstance, evaluate_schedule, peak_reduction, solve_offline
from ..crcomp import optimal_cr
from ..exceptions import IoError, PeakShaveError, PolicyRunError
from ..online import BASELINE_KINDS, BaselinePolicy, run_adaptive, run_baseline, run_pcr
from .config import ExperimentConfig

log = logging.getLogger(__name__)

RATIO_TOL = 1e-9


@dataclass
class ReportRow:
    capacity_rate: float
    policy: str
    episode: str
    original_peak: float
    online_peak: float
    reduction: float
    offline_reduction: float
    ratio: float
    reduction_rate: float
    pi_star: float
    feasible: bool
    degenerate: bool


@dataclass
class Aggregate:
    capacity_rate: float
    policy: str
    n_episodes: int
    mean_reduction_rate: float
    std_reduction_rate: float


@dataclass
class Report:
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "rows": [asdict(r) for r in self.rows],
            "aggregates": [asdict(a) for a in self.aggregates],
        }

    @classmethod
    def from_dict(cls, data) -> "Report":
        return cls(
            rows=[ReportRow(**r) for r in data.get("rows", [])],
            aggregates=[Aggregate(**a) for a in data.get("aggregates", [])],
            meta=data.get("meta", {}),
        )

    def rows_for(self, policy, capacity_rate=None):
        return [r for r in self.rows if r.policy == policy
                and (capacity_rate is None or r.capacity_rate == capacity_rate)]


# documented CSV layout: one line per row, aggregates are not included
CSV_COLUMNS = tuple(f.name for f in fields(ReportRow))


def offline_to_online(offline, online, tol=1e-12):
    """Return ``(ratio, degenerate)`` with the 0/0 case defined as 1."""
    if offline <= tol:
        return 1.0, True
    if online <= tol:
        return math.inf, False
    return offline / online, False


def aggregate(rows) -> list:
    groups = {}
    for r in rows:
        groups.setdefault((r.capacity_rate, r.policy), []).append(r.reduction_rate)
    return [
        Aggregate(rate, policy, len(v), float(np.mean(v)), float(np.std(v)))
        for (rate, policy), v in sorted(groups.items())
    ]


def _baseline_params(inst, episodes):
    """THR_avg threshold and Eql_Per ratio learned from the episode set."""
    D = np.vstack([e.demands for e in episodes])
    threshold = float(np.mean([solve_offline(inst, d).peak_after for d in D]))
    ratio = min(1.0, inst.c / float(np.mean(D.sum(axis=1))))
    return threshold, ratio


def _schedule(policy, inst, d, pi_star, config, params):
    if policy == "offline":
        return solve_offline(inst, d).schedule.values
    if policy == "pcr":
        return run_pcr(inst, pi_star, d).values
    if policy == "adaptive":
        run = run_adaptive(inst, d, config.epsilon, pi_star=pi_star,
                           method=config.adaptive_method, lp_method=config.lp_method)
        return run.schedule.values
    threshold, ratio = params
    bp = BaselinePolicy(policy, threshold=threshold, ratio=ratio, window=config.rhc_window)
    return run_baseline(bp, inst, d).values


def run_experiment(config: ExperimentConfig, episodes) -> Report:
    """Run every configured policy on every episode at every capacity rate.

    Parameters
    ----------
    config : ExperimentConfig
    episodes : sequence of Episode
        All of length ``config.instance.T``.

    Returns
    -------
    Report
        Rows sorted by capacity rate, policy and episode id.
    """
    base = config.instance
    episodes = list(episodes)
    for e in episodes:
        if len(e.demands) != base.T:
            raise ValueError(f"episode {e.id} has {len(e.demands)} slots, expected {base.T}")
    mean_energy = float(np.mean([e.demands.sum() for e in episodes])) if episodes else 0.0
    rows = []
    meta = {"instance": base.as_dict(), "mean_energy": mean_energy, "epsilon": config.epsilon,
            "adaptive_method": config.adaptive_method, "n_episodes": len(episodes),
            "clip_count": int(sum(getattr(e, "clipped", 0) for e in episodes)),
            "rates": []}
    if not episodes:
        return Report([], [], meta)
    for rate in sorted(config.capacity_rates):
        inst: ProblemInstance = config.instance_for_rate(rate, mean_energy)
        pi_star = optimal_cr(inst, method=config.lp_method).pi_star
        log.info("rate %.4g: c=%.6g pi*=%.9f", rate, inst.c, pi_star)
        meta["rates"].append({"capacity_rate": rate, "c": inst.c, "pi_star": pi_star})
        needs = set(config.policies) & {"THR_avg", "Eql_Per"}
        params = _baseline_params(inst, episodes) if needs else (None, None)
        for e in episodes:
            offline = solve_offline(inst, e.demands)
            peak = float(e.demands.max())
            for policy in config.policies:
                try:
                    delta = _schedule(policy, inst, e.demands, pi_star, config, params)
                except PeakShaveError as exc:
                    raise PolicyRunError(policy, e.id, exc) from exc
                red = peak_reduction(e.demands, delta)
                ratio, degenerate = offline_to_online(offline.reduction, red)
                if policy == "offline":
                    ratio, degenerate = 1.0, offline.reduction <= 1e-12
                rows.append(ReportRow(
                    capacity_rate=rate, policy=policy, episode=e.id,
                    original_peak=peak, online_peak=peak - red, reduction=red,
                    offline_reduction=offline.reduction, ratio=ratio,
                    reduction_rate=red / peak if peak > 0 else 0.0, pi_star=pi_star,
                    feasible=evaluate_schedule(inst, e.demands, delta).feasible,
                    degenerate=degenerate,
                ))
    order = {p: k for k, p in enumerate(("offline", "pcr", "adaptive") + BASELINE_KINDS)}
    rows.sort(key=lambda r: (r.capacity_rate, order[r.policy], r.episode))
    return Report(rows, aggregate(rows), meta)


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.9f}"
    return str(value)


def write_csv(report: Report, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def write_json(report: Report, fh):
    json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    fh.write("\n")


def emit_report(report: Report, fmt="json", path=None):
    """Serialize ``report`` as JSON or CSV to ``path`` (stdout when ``None``)."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    writer = write_json if fmt == "json" else write_csv
    if path is None:
        import sys

        writer(report, sys.stdout)
        return
    try:
        with open(path, "w", newline="") as fh:
            writer(report, fh)
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc


def read_report(path) -> Report:
    with open(path) as fh:
        return Report.from_dict(json.load(fh))
