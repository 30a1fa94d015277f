"""Optimal competitive ratio of online peak reduction via linear-fractional programs.

For an index set ``I`` the program maximises, over demand profiles ``d`` in
the bound box,

    sum_{i in I} sigma(d^i) / (c + sum_{i in I} (max_{k<=i} d_k - d_i))

where ``d^i`` is ``d`` truncated after slot ``i`` and padded with ``d_lb``.
The optimal ratio is the maximum of this value over the prefix sets
``{1..t}``, ``t = 1..T``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, reference_profile, solve_offline, validate_instance
from .lp import LE, AffineForm, FractionalProgram, LinearProgram, solve_linear_fractional

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrCompSpec:
    """Instance plus a 1-based index set; prefixes ``{1..t}`` in production use."""

    instance: ProblemInstance
    index_set: tuple

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.index_set))
        if not idx:
            raise ValueError("index set must be nonempty")
        if idx[0] < 1 or idx[-1] > self.instance.T or len(set(idx)) != len(idx):
            raise ValueError(f"index set {idx} is not a subset of 1..{self.instance.T}")
        object.__setattr__(self, "index_set", idx)

    @classmethod
    def prefix(cls, instance, t):
        return cls(instance, tuple(range(1, t + 1)))


@dataclass(frozen=True)
class OptimalCr:
    pi_star: float
    argmax_prefix: int
    witness_profile: np.ndarray
    prefix_values: tuple


class CrCompLayout:
    """Column layout of a CR-Comp program.

    Columns are ``d_1..d_T`` followed, for each ``i`` in the index set, by
    ``m_i``, ``u_i`` and ``delta_i1..delta_iT``. ``u_i`` is the offline peak
    after discharge under the reference profile ``d^i``.
    """

    def __init__(self, T, index_set):
        self.T = T
        self.index_set = tuple(index_set)
        self.block = 2 + T
        self.n_vars = T + len(self.index_set) * self.block

    def d(self, j):
        return j - 1

    def _base(self, pos):
        return self.T + pos * self.block

    def m(self, pos):
        return self._base(pos)

    def u(self, pos):
        return self._base(pos) + 1

    def delta(self, pos, j):
        return self._base(pos) + 1 + j


def build_cr_comp(spec: CrCompSpec) -> FractionalProgram:
    inst = spec.instance
    T = inst.T
    lay = CrCompLayout(T, spec.index_set)
    n = lay.n_vars
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
    lower[:T] = inst.d_lb
    upper[:T] = inst.d_ub
    num = np.zeros(n)
    den = np.zeros(n)
    for pos, i in enumerate(lay.index_set):
        add([(lay.delta(pos, j), 1.0) for j in range(1, T + 1)], LE, inst.c)
        for j in range(1, T + 1):
            col = lay.delta(pos, j)
            upper[col] = inst.delta_max
            if j <= i:
                add([(lay.d(j), 1.0), (col, -1.0), (lay.u(pos), -1.0)], LE, 0.0)
            else:
                add([(col, -1.0), (lay.u(pos), -1.0)], LE, -inst.d_lb)
        for k in range(1, i + 1):
            add([(lay.d(k), 1.0), (lay.m(pos), -1.0)], LE, 0.0)
        # a running max and an offline peak both live in [0, d_ub]; these
        # bounds keep the feasible set compact without cutting any optimum
        lower[lay.m(pos)], upper[lay.m(pos)] = inst.d_lb, inst.d_ub
        lower[lay.u(pos)], upper[lay.u(pos)] = 0.0, inst.d_ub
        num[lay.m(pos)] += 1.0
        num[lay.u(pos)] -= 1.0
        den[lay.m(pos)] += 1.0
        den[lay.d(i)] -= 1.0
    constraints = LinearProgram(
        objective=np.zeros(n),
        A=np.array(rows, dtype=float).reshape(len(rows), n),
        relations=rel,
        rhs=np.array(rhs),
        lower=lower,
        upper=upper,
    )
    return FractionalProgram(AffineForm(num, 0.0), AffineForm(den, inst.c), constraints)


def ratio_of_profile(inst: ProblemInstance, d, index_set) -> float:
    """Evaluate the CR-Comp ratio at a given demand profile directly."""
    d = np.asarray(d, dtype=float)
    num = 0.0
    den = inst.c
    for i in index_set:
        num += solve_offline(inst, reference_profile(d[:i], i, inst)).reduction
        den += float(np.max(d[:i]) - d[i - 1])
    return num / den


def _solve(spec, method):
    sol = solve_linear_fractional(build_cr_comp(spec), method=method)
    return sol.value, sol.point[: spec.instance.T]


def cr_comp_value(spec: CrCompSpec, method="simplex") -> float:
    """Optimal value of the CR-Comp program for ``spec``."""
    return _solve(spec, method)[0]


def optimal_cr(inst: ProblemInstance, method="simplex", n_jobs=1) -> OptimalCr:
    """Best competitive ratio, the maximum of the ``T`` prefix programs.

    The ratio is clamped below at one; ties go to the shortest prefix.
    """
    validate_instance(inst)
    specs = [CrCompSpec.prefix(inst, t) for t in range(1, inst.T + 1)]
    if n_jobs == 1:
        results = [_solve(s, method) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda s: _solve(s, method), specs))
    values = tuple(v for v, _ in results)
    best = int(np.argmax(values))
    witness = np.clip(results[best][1], inst.d_lb, inst.d_ub)
    pi_star = max(1.0, values[best])
    log.debug("pi*=%.9f at prefix %d (values %s)", pi_star, best + 1, values)
    return OptimalCr(pi_star=pi_star, argmax_prefix=best + 1,
                     witness_profile=witness, prefix_values=values)
