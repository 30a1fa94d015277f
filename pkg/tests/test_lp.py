import itertools

import numpy as np
import pytest

from peakshave.exceptions import DenominatorNonPositive, Infeasible
from peakshave.lp import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    UNBOUNDED,
    AffineForm,
    FractionalProgram,
    LinearProgram,
    charnes_cooper,
    solve_linear_fractional,
    solve_lp,
)


def lp(obj, A, rel, rhs, lower=None, upper=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    return LinearProgram(np.asarray(obj, float), A, list(rel), np.asarray(rhs, float),
                         np.zeros(n) if lower is None else np.asarray(lower, float),
                         np.full(n, np.inf) if upper is None else np.asarray(upper, float))


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_small_lp(method):
    p = lp([1, 1], [[1, 2], [3, 1]], [LE, LE], [4, 6])
    sol = solve_lp(p, method=method)
    assert sol.optimal
    assert sol.value == pytest.approx(2.8)
    np.testing.assert_allclose(sol.point, [1.6, 1.2], atol=1e-9)


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_infeasible_and_unbounded(method):
    assert solve_lp(lp([1], [[1], [1]], [LE, GE], [1, 2]), method=method).status == INFEASIBLE
    assert solve_lp(lp([1, 0], [[0, 1]], [LE], [1]), method=method).status == UNBOUNDED


def test_equality_and_free_variables():
    p = lp([1, -1], [[1, 1]], [EQ], [2], lower=[-np.inf, -np.inf], upper=[3, 3])
    sol = solve_lp(p)
    assert sol.value == pytest.approx(4.0)
    np.testing.assert_allclose(sol.point, [3, -1], atol=1e-9)


def _vertex_optimum(p):
    """Maximum of the objective over all basic solutions of a small LP (x >= 0, <= rows)."""
    A, b = p.A, p.rhs
    m, n = A.shape
    rows = np.vstack([A, -np.eye(n)])
    rhs = np.concatenate([b, np.zeros(n)])
    best = -np.inf
    for active in itertools.combinations(range(m + n), n):
        M = rows[list(active)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, rhs[list(active)])
        if np.all(rows @ x <= rhs + 1e-9):
            best = max(best, float(p.objective @ x))
    return best


def test_random_lps_against_vertex_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        A = rng.uniform(0.1, 2.0, (m, n))  # positive rows keep the region bounded
        p = lp(rng.normal(size=n), A, [LE] * m, rng.uniform(0.5, 5, m))
        sol = solve_lp(p)
        assert sol.optimal
        assert sol.value == pytest.approx(_vertex_optimum(p), abs=1e-7)
        assert sol.value == pytest.approx(solve_lp(p, method="highs").value, abs=1e-7)


def test_scaling_invariance():
    p = lp([3, 2], [[1, 1], [1, 3]], [LE, LE], [4, 6])
    base = solve_lp(p).value
    scaled = lp([3, 2], 1e3 * p.A, [LE, LE], 1e3 * p.rhs)
    assert solve_lp(scaled).value == pytest.approx(base, rel=1e-9)
    assert solve_lp(lp([3e2, 2e2], p.A, [LE, LE], p.rhs)).value == pytest.approx(1e2 * base, rel=1e-9)


def _fp(num, den, A, rel, rhs, upper=None):
    cons = lp(np.zeros(len(num)), A, rel, rhs, upper=upper)
    return FractionalProgram(AffineForm(np.asarray(num, float), 0.0),
                             AffineForm(np.asarray(den[0], float), float(den[1])), cons)


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_linear_fractional(method):
    # max (x + 1) / (y + 1) over x + y <= 2: the denominator is smallest at y = 0
    fp = FractionalProgram(AffineForm(np.array([1.0, 0.0]), 1.0), AffineForm(np.array([0.0, 1.0]), 1.0),
                           lp([0, 0], [[1, 1]], [LE], [2]))
    sol = solve_linear_fractional(fp, method=method)
    assert sol.value == pytest.approx(3.0)
    np.testing.assert_allclose(sol.point, [2, 0], atol=1e-8)
    # constant ratio
    fp = _fp([2, 2], ([1, 1], 0.0), [[1, 1]], [GE], [1], upper=[3, 3])
    assert solve_linear_fractional(fp, method=method).value == pytest.approx(2.0)


def test_linear_fractional_two_thirds():
    # max x / (x + 1) with x in [0, 2]
    fp = FractionalProgram(AffineForm(np.array([1.0]), 0.0), AffineForm(np.array([1.0]), 1.0),
                           lp([0], np.zeros((0, 1)), [], [], upper=[2]))
    assert solve_linear_fractional(fp).value == pytest.approx(2 / 3)


def test_linear_fractional_errors():
    fp = _fp([1], ([1], 1.0), [[1], [1]], [LE, GE], [1, 2])
    with pytest.raises(Infeasible):
        solve_linear_fractional(fp)
    fp = _fp([1], ([-1], 0.0), [[1]], [LE], [1])
    with pytest.raises(DenominatorNonPositive):
        solve_linear_fractional(fp)


def test_charnes_cooper_adds_scale_column():
    fp = _fp([1, 2], ([1, 1], 1.0), [[1, 1]], [LE], [3])
    cc = charnes_cooper(fp)
    assert cc.n_vars == 3
