"""Problem instances, discharge schedules and the offline peak-reduction solver.

All energy quantities are in kWh per slot. A demand profile is a 1-D float
array of length ``T``; a discharge schedule wraps another such array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import InvalidInstance, LengthMismatch

ABS_TOL = 1e-9


@dataclass(frozen=True)
class ProblemInstance:
    """Horizon, storage and demand-bound parameters.

    Parameters
    ----------
    T : int
        Number of slots in the on-peak period.
    c : float
        Usable storage energy (kWh).
    delta_max : float
        Largest discharge in a single slot (kWh).
    d_lb, d_ub : float
        Lower and upper bound of the net demand in any slot (kWh).
    """

    T: int
    c: float
    delta_max: float
    d_lb: float
    d_ub: float

    def replace(self, **changes) -> "ProblemInstance":
        params = {
            "T": self.T,
            "c": self.c,
            "delta_max": self.delta_max,
            "d_lb": self.d_lb,
            "d_ub": self.d_ub,
        }
        params.update(changes)
        return ProblemInstance(**params)

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "c": self.c,
            "delta_max": self.delta_max,
            "d_lb": self.d_lb,
            "d_ub": self.d_ub,
        }


def validate_instance(raw: ProblemInstance) -> ProblemInstance:
    """Return ``raw`` unchanged if every instance invariant holds."""
    T = raw.T
    if isinstance(T, bool) or not isinstance(T, (int, np.integer)) or T < 1:
        raise InvalidInstance("T", f"T must be a positive integer, got {T!r}")
    for name in ("c", "delta_max", "d_lb", "d_ub"):
        value = getattr(raw, name)
        if not np.isfinite(value):
            raise InvalidInstance(name, f"{name} must be finite, got {value!r}")
    if raw.c <= 0:
        raise InvalidInstance("c", f"capacity must be positive, got {raw.c}")
    if raw.delta_max <= 0:
        raise InvalidInstance("delta_max", f"rate limit must be positive, got {raw.delta_max}")
    if raw.d_lb < 0:
        raise InvalidInstance("bounds", f"d_lb must be non-negative, got {raw.d_lb}")
    if raw.d_lb > raw.d_ub:
        raise InvalidInstance("bounds", f"d_lb={raw.d_lb} exceeds d_ub={raw.d_ub}")
    return raw


def as_profile(d: Sequence[float], inst: ProblemInstance | None = None, check_bounds=False):
    """Convert ``d`` to a float profile, optionally checking it against ``inst``."""
    arr = np.asarray(d, dtype=float)
    if arr.ndim != 1:
        raise LengthMismatch(f"demand profile must be 1-D, got shape {arr.shape}")
    if inst is not None:
        if arr.shape[0] != inst.T:
            raise LengthMismatch(f"profile has {arr.shape[0]} slots, instance has T={inst.T}")
        if check_bounds and (
            np.any(arr < inst.d_lb - ABS_TOL) or np.any(arr > inst.d_ub + ABS_TOL)
        ):
            raise InvalidInstance("bounds", "demand profile leaves [d_lb, d_ub]")
    return arr


@dataclass(frozen=True)
class DischargeSchedule:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def used_capacity(self) -> float:
        return float(np.sum(self.values))

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class OfflineSolution:
    """Optimal offline outcome for one demand profile.

    ``water_level`` solves ``sum_t [d_t - v]^+ = c`` and may be negative when
    the storage exceeds the total demand. ``threshold`` is the level the
    schedule actually shaves down to, after the rate limit and the
    non-negativity of the net draw are taken into account.
    """

    water_level: float
    threshold: float
    peak_after: float
    reduction: float
    schedule: DischargeSchedule


def water_level(d: np.ndarray, c: float) -> float:
    """Exact root of ``sum_t [d_t - v]^+ = c`` by a sorted breakpoint scan."""
    desc = np.sort(np.asarray(d, dtype=float))[::-1]
    prefix = np.cumsum(desc)
    T = desc.shape[0]
    for k in range(1, T + 1):
        level = (prefix[k - 1] - c) / k
        below = desc[k] if k < T else -np.inf
        # on the k-th linear piece the k largest demands sit above the level
        if level >= below:
            return float(level)
    raise AssertionError("unreachable: the last piece extends to -inf")


def solve_offline(inst: ProblemInstance, d) -> OfflineSolution:
    """Maximum peak reduction for a known demand profile.

    The schedule shaves every slot down to ``max(v, max(d) - delta_max, 0)``
    where ``v`` is the water level of the capacity.
    """
    d = as_profile(d, inst)
    peak = float(np.max(d))
    v = water_level(d, inst.c)
    threshold = max(v, peak - inst.delta_max, 0.0)
    delta = np.maximum(d - threshold, 0.0)
    peak_after = min(peak, threshold)
    return OfflineSolution(
        water_level=v,
        threshold=threshold,
        peak_after=peak_after,
        reduction=peak - peak_after,
        schedule=DischargeSchedule(delta),
    )


def reference_profile(observed, t: int, inst: ProblemInstance) -> np.ndarray:
    """Observed demands for slots ``1..t`` padded with ``d_lb`` up to ``T``."""
    observed = np.asarray(observed, dtype=float)
    if observed.ndim != 1 or observed.shape[0] != t:
        raise LengthMismatch(f"expected {t} observed demands, got shape {observed.shape}")
    if not 1 <= t <= inst.T:
        raise LengthMismatch(f"slot index {t} outside 1..{inst.T}")
    out = np.full(inst.T, float(inst.d_lb))
    out[:t] = observed
    return out


@dataclass
class ScheduleEvaluation:
    feasible: bool
    reduction: float
    violations: list = field(default_factory=list)


def evaluate_schedule(inst: ProblemInstance, d, s) -> ScheduleEvaluation:
    """Check a schedule against the inventory and per-slot constraints.

    Violations are ``(kind, slot, amount)`` tuples with ``kind`` one of
    ``"inventory"`` (slot is ``None``), ``"negative"``, ``"rate"`` or
    ``"demand"``. Slots are 1-based.
    """
    d = as_profile(d, inst)
    delta = s.values if isinstance(s, DischargeSchedule) else np.asarray(s, dtype=float)
    if delta.shape != d.shape:
        raise LengthMismatch(f"schedule shape {delta.shape} != profile shape {d.shape}")
    violations = []
    total = float(np.sum(delta))
    if total > inst.c + ABS_TOL:
        violations.append(("inventory", None, total - inst.c))
    for t in range(d.shape[0]):
        if delta[t] < -ABS_TOL:
            violations.append(("negative", t + 1, -float(delta[t])))
        if delta[t] > inst.delta_max + ABS_TOL:
            violations.append(("rate", t + 1, float(delta[t] - inst.delta_max)))
        if delta[t] > d[t] + ABS_TOL:
            violations.append(("demand", t + 1, float(delta[t] - d[t])))
    reduction = float(np.max(d) - np.max(d - delta))
    return ScheduleEvaluation(feasible=not violations, reduction=reduction, violations=violations)


def peak_reduction(d, delta) -> float:
    d = np.asarray(d, dtype=float)
    return float(np.max(d) - np.max(d - np.asarray(delta, dtype=float)))
