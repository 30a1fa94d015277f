"""Dense linear and linear-fractional programming.

Programs are stated in maximisation form over box-bounded variables with
``<=``, ``=`` and ``>=`` rows. :func:`solve_lp` runs a two-phase tableau
simplex with Bland's smallest-index rule, so it cannot cycle. Passing
``method="highs"`` hands the same program to SciPy's HiGHS backend instead;
the result goes through the same certification either way.

Linear-fractional programs are reduced to a single LP by the
Charnes-Cooper substitution ``y = s x``, ``s = 1 / denominator``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DenominatorNonPositive, Infeasible, NumericalFailure

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8
PIVOT_TOL = 1e-11
LE, EQ, GE = "<=", "==", ">="
_RELATIONS = (LE, EQ, GE)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class LinearProgram:
    """``max objective @ x + constant`` subject to ``A x (rel) rhs`` and bounds.

    ``relations`` holds one of ``"<="``, ``"=="``, ``">="`` per row. Missing
    ``lower``/``upper`` default to ``0`` and ``+inf``.
    """

    objective: np.ndarray
    A: np.ndarray
    relations: list
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    constant: float = 0.0
    names: list | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.shape[0]
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float).reshape(self.rhs.shape[0], n)
        self.relations = list(self.relations)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        m = self.A.shape[0]
        if self.rhs.shape[0] != m or len(self.relations) != m:
            raise ValueError("A, relations and rhs must have one entry per row")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if any(r not in _RELATIONS for r in self.relations):
            raise ValueError(f"relations must be among {_RELATIONS}")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("right-hand sides must be finite")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def value_at(self, x) -> float:
        return float(self.objective @ x + self.constant)

    def max_violation(self, x) -> float:
        """Largest absolute constraint or bound violation at ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.n_rows:
            lhs = self.A @ x
            rel = np.asarray(self.relations)
            gap = np.where(rel == LE, lhs - self.rhs, 0.0)
            gap = np.maximum(gap, np.where(rel == GE, self.rhs - lhs, 0.0))
            gap = np.maximum(gap, np.where(rel == EQ, np.abs(lhs - self.rhs), 0.0))
            worst = float(np.max(gap, initial=0.0))
        with np.errstate(invalid="ignore"):
            worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
            worst = max(worst, float(np.max(x - self.upper, initial=0.0)))
        return worst


@dataclass
class AffineForm:
    coef: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float).ravel()

    def __call__(self, x) -> float:
        return float(self.coef @ np.asarray(x, dtype=float) + self.constant)


@dataclass
class FractionalProgram:
    """``max numerator(x) / denominator(x)`` over the feasible set of ``constraints``.

    ``constraints`` is a :class:`LinearProgram` whose objective is ignored.
    The caller guarantees the denominator is positive on the feasible set.
    """

    numerator: AffineForm
    denominator: AffineForm
    constraints: LinearProgram

    def ratio_at(self, x) -> float:
        return self.numerator(x) / self.denominator(x)


@dataclass
class LpSolution:
    status: str
    value: float = float("nan")
    point: np.ndarray | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# --------------------------------------------------------------------------
# standard form


class _StandardForm:
    """``min cost @ z`` s.t. ``M z = b``, ``z >= 0``, ``b >= 0``, plus the map back to x."""

    def __init__(self, p: LinearProgram):
        n = p.n_vars
        cols = []  # (source var, sign); x_j = offset_j + sum sign * z
        offset = np.zeros(n)
        extra_rows = []
        for j in range(n):
            lo, hi = p.lower[j], p.upper[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        nz = len(cols)
        T = np.zeros((n, nz))
        for k, (j, sgn) in enumerate(cols):
            T[j, k] = sgn
        self.transform = T
        self.offset = offset

        A = p.A @ T
        b = p.rhs - p.A @ offset
        rel = list(p.relations)
        for k, ub in extra_rows:
            row = np.zeros(nz)
            row[k] = 1.0
            A = np.vstack([A, row])
            b = np.append(b, ub)
            rel.append(LE)

        m = A.shape[0]
        n_slack = sum(r != EQ for r in rel)
        M = np.zeros((m, nz + n_slack))
        M[:, :nz] = A
        s = nz
        for i, r in enumerate(rel):
            if r == LE:
                M[i, s] = 1.0
                s += 1
            elif r == GE:
                M[i, s] = -1.0
                s += 1
        neg = b < 0
        M[neg] *= -1.0
        b = np.where(neg, -b, b)
        self.M = M
        self.b = b
        self.cost = np.zeros(M.shape[1])
        self.cost[:nz] = -(p.objective @ T)
        self.n_struct = nz

    def to_x(self, z):
        return self.offset + self.transform @ z[: self.n_struct]


# --------------------------------------------------------------------------
# tableau simplex


def _pivot(tab, row, col):
    piv = tab[row, col]
    if abs(piv) < PIVOT_TOL:
        raise NumericalFailure(f"pivot magnitude {abs(piv):.3e} below {PIVOT_TOL:g}")
    tab[row] /= piv
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, tab[row])


def _run_simplex(tab, basis, n_cols, max_iter):
    """Minimise the last row of ``tab`` in place; returns (status, iterations).

    Columns ``>= n_cols`` never enter. Bland's rule: the lowest-index improving
    column enters, ties in the ratio test go to the lowest basic index.
    """
    m = tab.shape[0] - 1
    it = 0
    while True:
        reduced = tab[-1, :n_cols]
        candidates = np.flatnonzero(reduced < -FEAS_TOL)
        if candidates.size == 0:
            return OPTIMAL, it
        col = int(candidates[0])
        column = tab[:m, col]
        positive = column > FEAS_TOL
        if not np.any(positive):
            return UNBOUNDED, it
        rows = np.flatnonzero(positive)
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + FEAS_TOL * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(tab, row, col)
        basis[row] = col
        it += 1
        if it >= max_iter:
            raise NumericalFailure(f"simplex exceeded {max_iter} pivots")


def _simplex(sf: _StandardForm, max_iter):
    M, b, cost = sf.M, sf.b, sf.cost
    m, n = M.shape
    # reuse slack columns that already form an identity block
    basis = [-1] * m
    slack = np.arange(sf.n_struct, n)
    unit = slack[(np.count_nonzero(M[:, slack], axis=0) == 1) & (M[:, slack].max(axis=0, initial=0.0) == 1.0)]
    for j in unit:
        i = int(np.argmax(M[:, j]))
        if basis[i] < 0:
            basis[i] = int(j)
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    tab = np.zeros((m + 1, n + n_art + 1))
    tab[:m, :n] = M
    tab[:m, -1] = b
    for k, i in enumerate(art_rows):
        tab[i, n + k] = 1.0
        basis[i] = n + k
    iters = 0
    if n_art:
        # phase one: minimise the artificial sum, written via reduced costs
        tab[-1, :] = 0.0
        for i in art_rows:
            tab[-1, :n] -= tab[i, :n]
            tab[-1, -1] -= tab[i, -1]
        status, it = _run_simplex(tab, basis, n, max_iter)
        iters += it
        if -tab[-1, -1] > FEAS_TOL * max(1.0, float(np.max(np.abs(b), initial=0.0))):
            return INFEASIBLE, None, iters
        # drive remaining artificials out, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= n:
                nonzero = np.flatnonzero(np.abs(tab[i, :n]) > FEAS_TOL)
                if nonzero.size:
                    _pivot(tab, i, int(nonzero[0]))
                    basis[i] = int(nonzero[0])
                    keep.append(i)
            else:
                keep.append(i)
        cols = list(range(n)) + [tab.shape[1] - 1]
        tab = tab[keep + [m]][:, cols]
        basis = [basis[i] for i in keep]
    m = len(basis)
    tab[-1, :] = 0.0
    tab[-1, :n] = cost
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            tab[-1, :] -= cost[j] * tab[i, :]
    status, it = _run_simplex(tab, basis, n, max_iter)
    iters += it
    if status != OPTIMAL:
        return status, None, iters
    z = np.zeros(n)
    for i, j in enumerate(basis):
        z[j] = tab[i, -1]
    return OPTIMAL, z, iters


def _highs(p: LinearProgram):
    from scipy.optimize import linprog

    rel = np.asarray(p.relations)
    le, ge, eq = rel == LE, rel == GE, rel == EQ
    A_ub = np.vstack([p.A[le], -p.A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([p.rhs[le], -p.rhs[ge]]) if A_ub is not None else None
    A_eq = p.A[eq] if eq.any() else None
    b_eq = p.rhs[eq] if eq.any() else None
    bounds = np.column_stack([p.lower, p.upper])  # linprog reads +-inf as unbounded
    res = linprog(-p.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution(INFEASIBLE, iterations=res.nit)
    if res.status == 3:
        return LpSolution(UNBOUNDED, iterations=res.nit)
    if res.status != 0:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    return LpSolution(OPTIMAL, p.value_at(res.x), np.asarray(res.x), iterations=res.nit)


def solve_lp(p: LinearProgram, method="simplex", max_iter=50_000) -> LpSolution:
    """Solve ``p`` and certify the returned point.

    Returns an :class:`LpSolution` with status ``"optimal"``, ``"infeasible"``
    or ``"unbounded"``. Raises :class:`NumericalFailure` when a pivot is too
    small or the optimal point misses a constraint by more than the
    feasibility tolerance (scaled by the data magnitude).
    """
    if method == "highs":
        sol = _highs(p)
    elif method == "simplex":
        sf = _StandardForm(p)
        status, z, iters = _simplex(sf, max_iter)
        if status != OPTIMAL:
            return LpSolution(status, iterations=iters)
        x = sf.to_x(z)
        sol = LpSolution(OPTIMAL, p.value_at(x), x, iterations=iters)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.optimal:
        scale = max(1.0, float(np.max(np.abs(p.rhs), initial=0.0)),
                    float(np.max(np.abs(sol.point), initial=0.0)))
        viol = p.max_violation(sol.point)
        if viol > FEAS_TOL * scale:
            raise NumericalFailure(f"optimal point violates constraints by {viol:.3e}")
    return sol


def charnes_cooper(fp: FractionalProgram) -> LinearProgram:
    """Equivalent LP in ``(y, s)`` with ``y = s x`` and ``s = 1 / denominator(x)``.

    Variable bounds of the original program turn into homogeneous rows in
    ``(y, s)``; the last variable of the returned program is ``s``.
    """
    p = fp.constraints
    n = p.n_vars
    rows = [np.hstack([p.A, -p.rhs[:, None]])]
    rel = list(p.relations)
    rhs = [np.zeros(p.n_rows)]
    lo_fin = np.flatnonzero(np.isfinite(p.lower) & (p.lower != 0.0))
    hi_fin = np.flatnonzero(np.isfinite(p.upper))
    if lo_fin.size:
        block = np.zeros((lo_fin.size, n + 1))
        block[np.arange(lo_fin.size), lo_fin] = 1.0
        block[:, -1] = -p.lower[lo_fin]
        rows.append(block)
        rel += [GE] * lo_fin.size
        rhs.append(np.zeros(lo_fin.size))
    if hi_fin.size:
        block = np.zeros((hi_fin.size, n + 1))
        block[np.arange(hi_fin.size), hi_fin] = 1.0
        block[:, -1] = -p.upper[hi_fin]
        rows.append(block)
        rel += [LE] * hi_fin.size
        rhs.append(np.zeros(hi_fin.size))
    norm = np.append(fp.denominator.coef, fp.denominator.constant)
    rows.append(norm[None, :])
    rel.append(EQ)
    rhs.append(np.ones(1))
    # a zero lower bound on x is a zero lower bound on y
    lower = np.where(p.lower == 0.0, 0.0, -np.inf)
    lower = np.append(lower, 0.0)
    return LinearProgram(
        objective=np.append(fp.numerator.coef, fp.numerator.constant),
        A=np.vstack(rows),
        relations=rel,
        rhs=np.concatenate(rhs),
        lower=lower,
        upper=np.full(n + 1, np.inf),
    )


def solve_linear_fractional(fp: FractionalProgram, method="simplex") -> LpSolution:
    """Maximise a ratio of affine forms via one equivalent LP.

    The returned point is in the original variables and ``value`` is the ratio
    evaluated there.
    """
    lp = charnes_cooper(fp)
    sol = solve_lp(lp, method=method)
    if sol.status == INFEASIBLE:
        # either the region is empty or the denominator is never positive on it
        probe = solve_lp(replace(fp.constraints, objective=np.zeros(fp.constraints.n_vars)), method=method)
        if probe.status == INFEASIBLE:
            raise Infeasible("fractional program has an empty feasible set")
        raise DenominatorNonPositive("denominator is not positive anywhere on the feasible set")
    if sol.status == UNBOUNDED:
        raise DenominatorNonPositive("ratio is unbounded; the denominator approaches zero")
    s = sol.point[-1]
    if s <= 1e-12:
        raise DenominatorNonPositive(f"recovered scale s={s:.3e}; denominator not positive")
    x = sol.point[:-1] / s
    den = fp.denominator(x)
    if den <= 1e-12:
        raise DenominatorNonPositive(f"denominator {den:.3e} at recovered point")
    return LpSolution(OPTIMAL, fp.ratio_at(x), x, iterations=sol.iterations,
                      extra={"lp_value": sol.value, "scale": s})
