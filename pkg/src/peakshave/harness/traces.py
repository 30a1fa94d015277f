"""Demand traces: CSV ingestion and a synthetic generator.

The trace CSV has the header ``timestamp,demand_kwh`` with ISO-8601
timestamps and one row per slot. An episode is the ``T`` slots of one
calendar day starting at ``window_start`` and spaced ``slot_minutes`` apart.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta

import numpy as np

from ..exceptions import ParseError, ShortDay

log = logging.getLogger(__name__)

TRACE_HEADER = ("timestamp", "demand_kwh")

# bounds of the EV charging station study this generator imitates
DEFAULT_BOUNDS = (442.91, 1020.10)


@dataclass
class Episode:
    id: str
    demands: np.ndarray
    slot_minutes: int = 15
    clipped: int = 0

    def __post_init__(self):
        self.demands = np.asarray(self.demands, dtype=float)


class EpisodeList(list):
    """A list of episodes that also remembers what ingestion dropped or clipped."""

    def __init__(self, episodes=(), skipped=(), clip_count=0):
        super().__init__(episodes)
        self.skipped = list(skipped)
        self.clip_count = clip_count


def parse_window_start(value) -> time:
    if isinstance(value, time):
        return value
    try:
        return time.fromisoformat(str(value).strip())
    except ValueError as exc:
        raise ValueError(f"window_start must look like HH:MM, got {value!r}") from exc


def _read_rows(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise ParseError(1, f"header must be {','.join(TRACE_HEADER)}, got {header}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 2:
                raise ParseError(lineno, f"expected 2 fields, got {len(rec)}")
            try:
                stamp = datetime.fromisoformat(rec[0].strip())
            except ValueError:
                raise ParseError(lineno, f"bad timestamp {rec[0]!r}") from None
            try:
                value = float(rec[1])
            except ValueError:
                raise ParseError(lineno, f"bad demand {rec[1]!r}") from None
            if not np.isfinite(value):
                raise ParseError(lineno, f"non-finite demand {rec[1]!r}")
            rows.append((stamp, value))
    return rows


def load_traces(path, T, slot_minutes, window_start, bounds, strict=False) -> EpisodeList:
    """Cut a trace CSV into per-day episodes clipped into ``bounds``.

    Days that do not hold every slot of the window are skipped and listed in
    ``result.skipped``; with ``strict=True`` the first one raises
    :class:`ShortDay` instead.
    """
    start = parse_window_start(window_start)
    d_lb, d_ub = bounds
    by_day = defaultdict(dict)
    for stamp, value in _read_rows(path):
        by_day[stamp.date()][stamp.replace(tzinfo=None)] = value
    episodes, skipped, clips = [], [], 0
    step = timedelta(minutes=slot_minutes)
    for day in sorted(by_day):
        first = datetime.combine(day, start)
        slots = [first + k * step for k in range(T)]
        values = [by_day[day].get(s) for s in slots]
        present = sum(v is not None for v in values)
        if present < T:
            if strict:
                raise ShortDay(day.isoformat(), present, T)
            log.info("skipping %s: %d of %d slots", day, present, T)
            skipped.append(day.isoformat())
            continue
        raw = np.array(values, dtype=float)
        demands = np.clip(raw, d_lb, d_ub)
        n_clip = int(np.count_nonzero(demands != raw))
        clips += n_clip
        episodes.append(Episode(day.isoformat(), demands, slot_minutes, n_clip))
    return EpisodeList(episodes, skipped, clips)


def generate_synthetic(config, n_episodes, seed=None):
    """Synthetic episodes for ``config``'s horizon and bounds (seed defaults to ``config.seed``)."""
    inst = config.instance
    return synthetic_episodes(inst.T, (inst.d_lb, inst.d_ub), n_episodes,
                              config.seed if seed is None else seed, config.slot_minutes)


def synthetic_episodes(T, bounds, n_episodes, seed, slot_minutes=15, start_day=date(2024, 1, 1)):
    """Deterministic synthetic episodes with a daily peak and noise.

    Each day draws a base level, a peak position and height, and AR(1) noise;
    the result is clipped into ``bounds``. The same seed always yields the
    same episodes.
    """
    d_lb, d_ub = bounds
    rng = np.random.default_rng(seed)
    span = d_ub - d_lb
    x = np.arange(T)
    out = []
    for n in range(n_episodes):
        base = d_lb + span * rng.uniform(0.2, 0.45)
        centre = rng.uniform(0.2, 0.8) * (T - 1)
        width = max(1.0, rng.uniform(0.1, 0.3) * T)
        height = span * rng.uniform(0.15, 0.55)
        noise = np.empty(T)
        eps = rng.normal(0.0, 0.06 * span, T)
        noise[0] = eps[0]
        for k in range(1, T):
            noise[k] = 0.6 * noise[k - 1] + eps[k]
        profile = base + height * np.exp(-0.5 * ((x - centre) / width) ** 2) + noise
        day = start_day + timedelta(days=n)
        out.append(Episode(day.isoformat(), np.clip(profile, d_lb, d_ub), slot_minutes))
    return out


def write_traces(episodes, path, window_start, slot_minutes=15):
    """Write episodes as a trace CSV that :func:`load_traces` reads back."""
    start = parse_window_start(window_start)
    step = timedelta(minutes=slot_minutes)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for ep in episodes:
            first = datetime.combine(date.fromisoformat(ep.id), start)
            for k, value in enumerate(ep.demands):
                w.writerow([(first + k * step).isoformat(), f"{value:.4f}"])
