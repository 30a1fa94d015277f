"""Online discharge policies.

``pcr_step``/``run_pcr`` keep the offline-to-online reduction ratio under the
reference profile at or below a fixed ``pi`` at every slot. ``adaptive_cr``
and ``run_adaptive`` re-derive the smallest ratio that can still be held,
given what has been observed and spent so far. ``run_baseline`` covers the
threshold, equal-split and receding-horizon comparison policies.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ABS_TOL,
    DischargeSchedule,
    ProblemInstance,
    as_profile,
    reference_profile,
    solve_offline,
    validate_instance,
)
from .exceptions import CapacityViolation, DegenerateRatio, MissingParameter
from .lp import (
    EQ,
    LE,
    AffineForm,
    FractionalProgram,
    LinearProgram,
    solve_linear_fractional,
    solve_lp,
)

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6
LP_METHOD = "highs"


@dataclass
class OnlineState:
    """Everything an online policy has seen and done up to the current slot.

    After :meth:`observe` the state holds ``t`` demands and ``t - 1`` actions;
    :meth:`act` records the discharge for slot ``t``.
    """

    instance: ProblemInstance
    observed: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    used_capacity: float = 0.0
    running_max: float = -math.inf
    running_online_peak: float = 0.0
    current_ratio: float = math.inf
    sigmas: list = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.observed)

    @property
    def remaining(self) -> float:
        return self.instance.c - self.used_capacity

    @property
    def sigma_t(self) -> float:
        return self.sigmas[-1]

    def observe(self, d_t: float) -> None:
        if len(self.observed) != len(self.actions):
            raise RuntimeError("slot observed twice without an action in between")
        if self.t >= self.instance.T:
            raise RuntimeError("horizon exhausted")
        self.observed.append(float(d_t))
        self.running_max = max(self.running_max, float(d_t))
        ref = reference_profile(self.observed, self.t, self.instance)
        self.sigmas.append(solve_offline(self.instance, ref).reduction)

    def act(self, delta_t: float) -> None:
        if len(self.actions) + 1 != len(self.observed):
            raise RuntimeError("act() needs exactly one pending observation")
        # online peak before the current slot, so it is updated after use
        self.running_online_peak = max(self.running_online_peak, self.observed[-1] - delta_t)
        self.actions.append(float(delta_t))
        self.used_capacity += float(delta_t)


def pursuit_discharge(state: OnlineState, pi: float) -> float:
    """``[d_t - max_k d_k + sigma(d^t) / pi]^+`` for the pending slot."""
    d_t = state.observed[-1]
    return max(d_t - state.running_max + state.sigma_t / pi, 0.0)


def pcr_step(state: OnlineState, pi: float, d_t: float, check_capacity=True) -> float:
    """Observe ``d_t``, discharge to hold ratio ``pi``, and return the discharge."""
    if pi < 1.0:
        raise ValueError(f"ratio must be >= 1, got {pi}")
    state.observe(d_t)
    delta = pursuit_discharge(state, pi)
    if check_capacity and state.used_capacity + delta > state.instance.c + ABS_TOL:
        raise CapacityViolation(state.t, state.used_capacity + delta, state.instance.c)
    state.current_ratio = pi
    state.act(delta)
    return delta


def run_pcr(inst: ProblemInstance, pi: float, d, check_capacity=True) -> DischargeSchedule:
    d = as_profile(d, inst)
    state = OnlineState(inst)
    for d_t in d:
        pcr_step(state, pi, d_t, check_capacity=check_capacity)
    return DischargeSchedule(np.array(state.actions))


# --------------------------------------------------------------------------
# adaptive ratio


@dataclass(frozen=True)
class AdaptiveCrResult:
    pi_t: float
    pi_lb_t: float
    iterations: int


class AdaCrLayout:
    """Columns ``d_i, m_i, v_i, delta_i1..delta_iT`` for each future slot ``i``."""

    def __init__(self, T, index_set):
        self.T = T
        self.index_set = tuple(index_set)
        self.block = 3 + T
        self.n_vars = len(self.index_set) * self.block
        self._pos = {i: p for p, i in enumerate(self.index_set)}

    def d(self, i):
        return self._pos[i] * self.block

    def m(self, i):
        return self._pos[i] * self.block + 1

    def v(self, i):
        return self._pos[i] * self.block + 2

    def delta(self, i, j):
        return self._pos[i] * self.block + 2 + j


def _future_set(state, index_set):
    t = state.t
    idx = tuple(index_set)
    if idx != tuple(range(t + 1, t + 1 + len(idx))) or (idx and idx[-1] > state.instance.T):
        raise ValueError(f"index set must be {{t+1..k}} with t={t}, got {idx}")
    return idx


def _adacr_feasible_set(state, index_set, equality=True):
    """Constraint rows shared by the threshold LP and its fractional twin."""
    inst = state.instance
    T = inst.T
    t = state.t
    lay = AdaCrLayout(T, index_set)
    n = lay.n_vars
    known = state.observed
    rows, rel, rhs = [], [], []

    def add(coefs, relation, value):
        row = np.zeros(n)
        for col, a in coefs:
            row[col] += a
        rows.append(row)
        rel.append(relation)
        rhs.append(value)

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    floor = max(state.running_max, inst.d_lb)
    for i in lay.index_set:
        add([(lay.delta(i, j), 1.0) for j in range(1, T + 1)], EQ if equality else LE, inst.c)
        for j in range(1, T + 1):
            col = lay.delta(i, j)
            upper[col] = inst.delta_max
            if j <= t:
                add([(col, -1.0), (lay.v(i), -1.0)], LE, -known[j - 1])
            elif j <= i:
                add([(lay.d(j), 1.0), (col, -1.0), (lay.v(i), -1.0)], LE, 0.0)
            else:
                add([(col, -1.0), (lay.v(i), -1.0)], LE, -inst.d_lb)
        # observed demands enter the running max through m_i's lower bound
        for k in range(t + 1, i + 1):
            add([(lay.d(k), 1.0), (lay.m(i), -1.0)], LE, 0.0)
        lower[lay.d(i)], upper[lay.d(i)] = inst.d_lb, inst.d_ub
        lower[lay.m(i)], upper[lay.m(i)] = floor, max(floor, inst.d_ub)
        lower[lay.v(i)], upper[lay.v(i)] = 0.0, max(floor, inst.d_ub)
    A = np.array(rows, dtype=float).reshape(len(rows), n)
    return lay, A, rel, np.array(rhs), lower, upper


class CompactLayout:
    """Columns ``d_i, m_i, v_i, e_i, w_i, delta_i(t+1)..delta_ii`` per future slot ``i``.

    ``e_i`` carries the discharge on observed slots and ``w_i`` the discharge
    on the ``T - i`` trailing lower-bound slots, each through its epigraph.
    """

    def __init__(self, t, index_set):
        self.t = t
        self.index_set = tuple(index_set)
        self._base = {}
        n = 0
        for i in self.index_set:
            self._base[i] = n
            n += 5 + (i - t)
        self.n_vars = n

    def d(self, i):
        return self._base[i]

    def m(self, i):
        return self._base[i] + 1

    def v(self, i):
        return self._base[i] + 2

    def e(self, i):
        return self._base[i] + 3

    def w(self, i):
        return self._base[i] + 4

    def delta(self, i, j):
        return self._base[i] + 5 + (j - self.t - 1)


def _compact_feasible_set(state, index_set):
    """Same projection onto ``(d, m, v)`` as :func:`_adacr_feasible_set`, fewer columns.

    Per future slot the observed part of the inventory needs
    ``e_i >= sum_j [d_j - v_i]^+``, written as ``e_i >= S_k - k v_i`` over
    the sums ``S_k`` of the ``k`` largest observations. The trailing slots
    all see ``d_lb`` and collapse into one column. When ``T * delta_max >=
    c`` any point meeting ``<= c`` can be topped up to exactly ``c``, so the
    equality and inequality versions coincide here.
    """
    inst = state.instance
    T, t = inst.T, state.t
    lay = CompactLayout(t, index_set)
    n = lay.n_vars
    known = np.sort(np.asarray(state.observed, dtype=float))[::-1]
    top = np.cumsum(known)
    entries, rhs = [], []

    def add(coefs, value):
        r = len(rhs)
        entries.extend((r, col, a) for col, a in coefs)
        rhs.append(value)

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    floor = max(state.running_max, inst.d_lb)
    vmax = max(floor, inst.d_ub)
    for i in lay.index_set:
        tail = T - i
        mids = range(t + 1, i + 1)
        add([(lay.e(i), 1.0), (lay.w(i), 1.0)] + [(lay.delta(i, j), 1.0) for j in mids], inst.c)
        for k in range(1, t + 1):
            add([(lay.e(i), -1.0), (lay.v(i), -float(k))], -top[k - 1])
        for j in mids:
            add([(lay.d(j), 1.0), (lay.delta(i, j), -1.0), (lay.v(i), -1.0)], 0.0)
            add([(lay.d(j), 1.0), (lay.m(i), -1.0)], 0.0)
            upper[lay.delta(i, j)] = inst.delta_max
        if tail:
            add([(lay.w(i), -1.0), (lay.v(i), -float(tail))], -tail * inst.d_lb)
        upper[lay.w(i)] = tail * inst.delta_max
        v_lo = max(0.0, (known[0] if t else 0.0) - inst.delta_max,
                   inst.d_lb - inst.delta_max if tail else 0.0)
        lower[lay.d(i)], upper[lay.d(i)] = inst.d_lb, inst.d_ub
        lower[lay.m(i)], upper[lay.m(i)] = floor, vmax
        lower[lay.v(i)], upper[lay.v(i)] = min(v_lo, vmax), vmax
    A = np.zeros((len(rhs), n))
    if entries:
        r, c, a = np.array(entries).T
        np.add.at(A, (r.astype(int), c.astype(int)), a)
    return lay, A, [LE] * len(rhs), np.array(rhs), lower, upper


def _inventory_equality(inst):
    # sum_j delta_ij = c has no solution when T * delta_max < c
    return inst.T * inst.delta_max >= inst.c


def build_adacr_threshold(state: OnlineState, pi: float, index_set, equality=None):
    """Threshold LP for future slots ``index_set = {t+1..k}`` at ratio ``pi``.

    Returns ``(program, constant)``: the worst-case future discharge under
    ratio ``pi`` is ``constant + program optimum``, where ``constant`` is the
    current slot's own discharge. An empty ``index_set`` gives an empty
    program with optimum zero.
    """
    inst = state.instance
    idx = _future_set(state, index_set)
    if equality is None:
        equality = _inventory_equality(inst)
    lay, A, rel, rhs, lower, upper = _adacr_feasible_set(state, idx, equality)
    obj = np.zeros(lay.n_vars)
    for i in idx:
        obj[lay.d(i)] += 1.0
        obj[lay.m(i)] -= 1.0 - 1.0 / pi
        obj[lay.v(i)] -= 1.0 / pi
    program = LinearProgram(obj, A, rel, rhs, lower, upper)
    return program, pursuit_discharge(state, pi)


def _adacr_fractional(state, index_set, shift_num, shift_den, equality, compact=False):
    """``max (sum(m_i - v_i) + shift_num) / (shift_den + sum(m_i - d_i))``."""
    if compact:
        lay, A, rel, rhs, lower, upper = _compact_feasible_set(state, index_set)
    else:
        lay, A, rel, rhs, lower, upper = _adacr_feasible_set(state, index_set, equality)
    num = np.zeros(lay.n_vars)
    den = np.zeros(lay.n_vars)
    for i in lay.index_set:
        num[lay.m(i)] += 1.0
        num[lay.v(i)] -= 1.0
        den[lay.m(i)] += 1.0
        den[lay.d(i)] -= 1.0
    constraints = LinearProgram(np.zeros(lay.n_vars), A, rel, rhs, lower, upper)
    return FractionalProgram(AffineForm(num, shift_num), AffineForm(den, shift_den), constraints)


def ratio_lower_bound(state: OnlineState) -> float:
    """``sigma(d^t) / (max_{k<=t} d_k - max_{k<t} (d_k - delta_k))``, at least one."""
    sigma = state.sigma_t
    if sigma <= ABS_TOL:
        return 1.0
    den = state.running_max - state.running_online_peak
    if den <= 1e-12:
        raise DegenerateRatio(f"slot {state.t}: lower-bound denominator {den:.3e}")
    return max(1.0, sigma / den)


def adaptive_cr(state: OnlineState, epsilon=DEFAULT_EPSILON, method="bisection",
                lp_method=LP_METHOD) -> AdaptiveCrResult:
    """Smallest ratio the remaining storage can still guarantee from slot ``t`` on.

    ``state`` must hold the current observation with its action pending, and
    ``state.current_ratio`` the previous slot's ratio (the static optimum
    before slot one). ``method="bisection"`` halves ``[lower bound, previous
    ratio]`` on the sign of the worst-case future discharge minus the
    remaining storage. ``method="fractional"`` solves for the same crossing
    point exactly through linear-fractional programs; it needs about a tenth
    of the LP solves and agrees with bisection to within ``epsilon``.
    """
    inst = state.instance
    if len(state.observed) != len(state.actions) + 1:
        raise RuntimeError("adaptive_cr needs a pending observation")
    ub = state.current_ratio
    if not np.isfinite(ub):
        raise ValueError("state.current_ratio must hold the previous ratio")
    lb = ratio_lower_bound(state)
    if lb > ub:
        log.info("slot %d: lower bound %.9g above previous ratio %.9g; clamped", state.t, lb, ub)
        lb = ub
    if method == "bisection":
        return _bisect_ratio(state, lb, ub, epsilon, lp_method)
    if method == "fractional":
        return _fractional_ratio(state, lb, ub, lp_method)
    raise ValueError(f"unknown method {method!r}")


def _future_sets(state):
    # longest future set first; it is usually the binding one
    return [tuple(range(state.t + 1, k + 1)) for k in range(state.instance.T, state.t, -1)]


def _fits(state, pi, lp_method, order):
    """True when the worst-case discharge at ratio ``pi`` fits the remaining storage.

    ``order`` lists future sets to try first; a violating set is moved to
    the front so later calls fail fast.
    """
    remaining = state.remaining
    tol = 1e-9 * max(1.0, state.instance.c)
    const = pursuit_discharge(state, pi)
    if const > remaining + tol:
        return False, 0
    equality = _inventory_equality(state.instance)
    solves = 0
    for pos, idx in enumerate(order):
        program, _ = build_adacr_threshold(state, pi, idx, equality)
        sol = solve_lp(program, method=lp_method)
        solves += 1
        if sol.optimal and const + sol.value > remaining + tol:
            order.insert(0, order.pop(pos))
            return False, solves
    return True, solves


def _bisect_ratio(state, lb, ub, epsilon, lp_method):
    order = _future_sets(state)
    fits, solves = _fits(state, lb, lp_method, order)
    if fits:
        return AdaptiveCrResult(lb, lb, solves)
    lo, hi = lb, ub
    while hi - lo >= epsilon:
        mid = 0.5 * (lo + hi)
        fits, n = _fits(state, mid, lp_method, order)
        solves += n
        if fits:
            hi = mid
        else:
            lo = mid
    return AdaptiveCrResult(hi, lb, solves)


def _fractional_ratio(state, lb, ub, lp_method):
    """Exact crossing ratio.

    With ``a = d_t - max_k d_k`` and ``b = sigma(d^t)`` the current slot adds
    ``[a + b / pi]^+``; a future set adds ``B / pi - A`` with ``B`` the summed
    offline reductions and ``A`` the summed gaps to the running max. Fitting in
    ``R`` therefore means ``pi >= (B + b) / (R - a + A)`` while the current
    slot discharges, and ``pi >= B / (R + A)`` once it does not.
    """
    inst = state.instance
    R = state.remaining
    if R <= 1e-9 * max(1.0, inst.c):
        # nothing left to protect; fall back to the direct test at the bound
        order = _future_sets(state)
        fits, solves = _fits(state, lb, lp_method, order)
        return AdaptiveCrResult(lb if fits else ub, lb, solves)
    a = state.observed[-1] - state.running_max
    b = state.sigma_t
    switch = b / -a if a < 0 else math.inf
    equality = _inventory_equality(inst)
    solves = 0
    # no reference profile can be shaved by more than this
    sigma_cap = min(inst.delta_max, inst.c, max(inst.d_ub, state.running_max))

    def crossing(shift_num, shift_den):
        # floored at lb: the result is clamped there anyway
        nonlocal solves
        best = max(lb, shift_num / shift_den)
        for idx in _future_sets(state):
            if best >= ub:
                break
            if (shift_num + len(idx) * sigma_cap) / shift_den <= best:
                continue
            fp = _adacr_fractional(state, idx, shift_num, shift_den, equality, compact=True)
            best = max(best, solve_linear_fractional(fp, method=lp_method).value)
            solves += 1
        return best

    threshold = crossing(b, R - a)
    if threshold >= switch:
        threshold = max(switch, crossing(0.0, R))
    pi_t = min(ub, max(lb, threshold))
    return AdaptiveCrResult(pi_t, lb, solves)


@dataclass
class AdaptiveRun:
    schedule: DischargeSchedule
    pi_series: np.ndarray
    lb_series: np.ndarray
    lp_solves: int = 0


def run_adaptive(inst: ProblemInstance, d, epsilon=DEFAULT_EPSILON, pi_star=None,
                 method="bisection", lp_method=LP_METHOD) -> AdaptiveRun:
    """Discharge with the slot-wise adaptive ratio.

    ``pi_star`` is the static optimal ratio; it is computed when omitted.
    """
    validate_instance(inst)
    d = as_profile(d, inst)
    if pi_star is None:
        from .crcomp import optimal_cr

        pi_star = optimal_cr(inst, method=lp_method).pi_star
    state = OnlineState(inst, current_ratio=pi_star)
    pis, lbs = [], []
    solves = 0
    for d_t in d:
        state.observe(d_t)
        try:
            res = adaptive_cr(state, epsilon, method=method, lp_method=lp_method)
        except DegenerateRatio:
            log.warning("slot %d: degenerate lower bound, keeping ratio %.9g", state.t, state.current_ratio)
            res = AdaptiveCrResult(state.current_ratio, 1.0, 0)
        solves += res.iterations
        delta = pursuit_discharge(state, res.pi_t)
        if delta > state.remaining:
            if delta > state.remaining + 1e-6:
                log.warning("slot %d: discharge %.9g clipped to remaining %.9g",
                            state.t, delta, state.remaining)
            delta = max(state.remaining, 0.0)
        state.current_ratio = res.pi_t
        state.act(delta)
        pis.append(res.pi_t)
        lbs.append(res.pi_lb_t)
    return AdaptiveRun(DischargeSchedule(np.array(state.actions)), np.array(pis), np.array(lbs), solves)


# --------------------------------------------------------------------------
# baselines

BASELINE_KINDS = ("THR_half", "THR_avg", "Eql_Dis", "Eql_Per", "RHC_lb", "RHC_ub", "RHC_half")


@dataclass(frozen=True)
class BaselinePolicy:
    """A comparison policy.

    ``threshold`` is the shaving target for ``THR_avg``; ``ratio`` the
    per-slot discharge fraction for ``Eql_Per``; ``window`` the look-ahead
    length of the ``RHC_*`` kinds.
    """

    kind: str
    threshold: float | None = None
    ratio: float | None = None
    window: int = 5

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}; expected one of {BASELINE_KINDS}")
        if self.kind.startswith("RHC") and self.window < 1:
            raise ValueError("look-ahead window must be at least one slot")
        if self.kind == "Eql_Per" and self.ratio is not None and not 0 <= self.ratio <= 1:
            raise ValueError("Eql_Per ratio must lie in [0, 1]")


def _rhc_guess(kind, inst):
    if kind == "RHC_lb":
        return inst.d_lb
    if kind == "RHC_ub":
        return inst.d_ub
    return 0.5 * (inst.d_lb + inst.d_ub)


def run_baseline(policy: BaselinePolicy, inst: ProblemInstance, d) -> DischargeSchedule:
    validate_instance(inst)
    d = as_profile(d, inst)
    T = inst.T
    kind = policy.kind
    if kind == "THR_avg" and policy.threshold is None:
        raise MissingParameter("THR_avg needs the historical average offline peak as threshold")
    if kind == "Eql_Per" and policy.ratio is None:
        raise MissingParameter("Eql_Per needs the capacity rate as ratio")
    out = np.zeros(T)
    used = 0.0
    for t in range(T):
        remaining = max(inst.c - used, 0.0)
        if kind in ("THR_half", "THR_avg"):
            thr = 0.5 * (inst.d_lb + inst.d_ub) if kind == "THR_half" else policy.threshold
            delta = min(inst.delta_max, max(d[t] - thr, 0.0), remaining)
        elif kind == "Eql_Dis":
            delta = min(inst.c / T, inst.delta_max, d[t], remaining)
        elif kind == "Eql_Per":
            delta = min(policy.ratio * d[t], inst.delta_max, remaining)
        else:
            delta = _rhc_step(policy, inst, d, t, remaining)
        out[t] = delta
        used += delta
    return DischargeSchedule(out)


def _rhc_step(policy, inst, d, t, remaining):
    if remaining <= 1e-12:
        return 0.0
    T = inst.T
    horizon = T - t
    end = min(t + policy.window, T)
    forecast = np.full(horizon, _rhc_guess(policy.kind, inst))
    forecast[: end - t] = d[t:end]
    sub = ProblemInstance(horizon, remaining, inst.delta_max, inst.d_lb, max(inst.d_ub, float(forecast.max())))
    plan = solve_offline(sub, forecast).schedule.values
    return float(min(plan[0], remaining, d[t]))
