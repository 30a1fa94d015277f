"""Brute-force reference computations for small horizons.

None of these routines share code with the production paths they check:
the offline oracle solves the peak-reduction LP directly, and the ratio
oracles enumerate demand grids and simulate the pursuit rule in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DischargeSchedule, OfflineSolution, ProblemInstance, as_profile
from .lp import GE, LE, LinearProgram, solve_lp


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the exhaustive adversary.

    ``demand_step=None`` splits ``[d_lb, d_ub]`` into eight intervals. Each
    of the ``refine_rounds`` re-enumerates a local grid, a quarter of the
    previous step wide, around the ``refine_keep`` best profiles found so far.
    """

    demand_step: float | None = None
    ratio_step: float = 1e-3
    max_T: int = 5
    refine_rounds: int = 0
    refine_keep: int = 16

    def __post_init__(self):
        if self.demand_step is not None and self.demand_step <= 0:
            raise ValueError("demand_step must be positive")
        if self.ratio_step <= 0:
            raise ValueError("ratio_step must be positive")
        if not 1 <= self.max_T <= 5:
            raise ValueError("max_T must lie in 1..5")
        if self.refine_rounds < 0 or self.refine_keep < 1:
            raise ValueError("refine_rounds must be >= 0 and refine_keep >= 1")

    def step(self, inst: ProblemInstance) -> float:
        return self.demand_step or (inst.d_ub - inst.d_lb) / 8

    def levels(self, inst: ProblemInstance) -> np.ndarray:
        span = inst.d_ub - inst.d_lb
        if span == 0:
            return np.array([inst.d_lb])
        step = self.step(inst)
        n = int(np.floor(span / step + 1e-9))
        pts = inst.d_lb + step * np.arange(n + 1)
        if pts[-1] < inst.d_ub - 1e-12:
            pts = np.append(pts, inst.d_ub)
        return pts


def brute_force_offline(inst: ProblemInstance, d, method="simplex") -> OfflineSolution:
    """Solve the peak-reduction problem as an LP in epigraph form.

    Variables are the discharges and the post-discharge peak ``z``; the
    objective ``max(d) - z`` is maximised. No water level is computed.
    """
    d = as_profile(d, inst)
    T = inst.T
    A = np.zeros((T + 1, T + 1))
    A[:T, :T] = np.eye(T)
    A[:T, T] = 1.0  # delta_t + z >= d_t
    A[T, :T] = 1.0
    rel = [GE] * T + [LE]
    rhs = np.append(d, inst.c)
    lower = np.append(np.zeros(T), -np.inf)
    upper = np.append(np.minimum(inst.delta_max, d), np.inf)
    obj = np.append(np.zeros(T), -1.0)
    peak = float(d.max())
    sol = solve_lp(LinearProgram(obj, A, rel, rhs, lower, upper, constant=peak), method=method)
    delta = np.clip(sol.point[:T], 0.0, None)
    peak_after = float(np.max(d - delta))
    return OfflineSolution(
        water_level=float("nan"),
        threshold=float(sol.point[T]),
        peak_after=peak_after,
        reduction=peak - peak_after,
        schedule=DischargeSchedule(delta),
    )


def _batch_reduction(D, c, delta_max):
    """Offline reduction of every row of ``D`` (vectorised water filling)."""
    desc = -np.sort(-D, axis=1)
    n, T = desc.shape
    k = np.arange(1, T + 1)
    levels = (np.cumsum(desc, axis=1) - c) / k
    nxt = np.hstack([desc[:, 1:], np.full((n, 1), -np.inf)])
    first = np.argmax(levels >= nxt, axis=1)
    v = levels[np.arange(n), first]
    peak = desc[:, 0]
    shave_to = np.maximum(np.maximum(v, peak - delta_max), 0.0)
    return peak - np.minimum(peak, shave_to)


def _tables(inst, G):
    run_max = np.maximum.accumulate(G, axis=1)
    sig = np.empty_like(G)
    for t in range(1, inst.T + 1):
        ref = np.full_like(G, inst.d_lb)
        ref[:, :t] = G[:, :t]
        sig[:, t - 1] = _batch_reduction(ref, inst.c, inst.delta_max)
    return G, G - run_max, sig


@lru_cache(maxsize=32)
def _grid_tables(inst: ProblemInstance, grid: GridSpec):
    if inst.T > grid.max_T:
        raise ValueError(f"T={inst.T} exceeds the oracle limit max_T={grid.max_T}")
    pts = grid.levels(inst)
    return _tables(inst, np.array(list(itertools.product(pts, repeat=inst.T)), dtype=float))


def _totals(tables, pi):
    G, gap, sig = tables
    return G, np.maximum(gap + sig / pi, 0.0).sum(axis=1)


def _refined(inst, pi, grid):
    G, totals = _totals(_grid_tables(inst, grid), pi)
    step = grid.step(inst)
    offsets = np.array(list(itertools.product(np.arange(-4, 5), repeat=inst.T)), dtype=float)
    for _ in range(grid.refine_rounds):
        step /= 4
        seeds = G[np.argsort(-totals, kind="stable")[: grid.refine_keep]]
        cand = (seeds[:, None, :] + step * offsets[None, :, :]).reshape(-1, inst.T)
        cand = np.unique(np.clip(cand, inst.d_lb, inst.d_ub), axis=0)
        G, totals = _totals(_tables(inst, np.vstack([seeds, cand])), pi)
    return G, totals


def brute_force_phi(inst: ProblemInstance, pi: float, grid: GridSpec = GridSpec(),
                    return_profile=False):
    """Largest total pursuit discharge at ratio ``pi`` over the demand grid.

    Capacity is not enforced, so values above ``c`` are reported as is.
    """
    G, totals = _refined(inst, pi, grid)
    best = int(np.argmax(totals))
    if return_profile:
        return float(totals[best]), G[best].copy()
    return float(totals[best])


def brute_force_optimal_cr(inst: ProblemInstance, grid: GridSpec = GridSpec()) -> float:
    """Smallest ratio, to ``grid.ratio_step``, whose grid inventory fits in ``c``."""
    c = inst.c
    if brute_force_phi(inst, 1.0, grid) <= c:
        return 1.0
    lo, hi = 1.0, 2.0
    while brute_force_phi(inst, hi, grid) > c:
        lo, hi = hi, 2.0 * hi
    while hi - lo > grid.ratio_step:
        mid = 0.5 * (lo + hi)
        if brute_force_phi(inst, mid, grid) > c:
            lo = mid
        else:
            hi = mid
    return hi
