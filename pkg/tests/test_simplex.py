import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from dmsuc.milp import (INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, RevisedSimplex,
                        SimplexOptions, dual_bound, solve_lp)
from oracles import tableau_simplex


def random_lp(rng, m_max=15, n_max=15):
    m, n = int(rng.integers(1, m_max + 1)), int(rng.integers(1, n_max + 1))
    A = np.round(rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.6), 1)
    x0 = rng.uniform(0, 3, n)
    sense = rng.choice(["L", "E", "G"], m, p=[0.5, 0.2, 0.3])
    act = A @ x0
    rhs = np.where(sense == "L", act + rng.uniform(0, 2, m),
                   np.where(sense == "G", act - rng.uniform(0, 2, m), act))
    if rng.random() < 0.2:
        rhs = rhs + rng.normal(size=m) * 3
    lo = np.where(rng.random(n) < 0.2, -np.inf, -rng.integers(0, 2, n).astype(float))
    hi = np.where(rng.random(n) < 0.3, np.inf, rng.integers(3, 5, n).astype(float))
    c = np.round(rng.normal(size=n), 1)
    return LinearProgram(c, A, sense, rhs, lo, hi, np.zeros(n, bool))


def highs_reference(lp):
    s = lp.sense
    A = lp.A.toarray()
    A_ub = np.vstack([A[s == "L"], -A[s == "G"]])
    b_ub = np.concatenate([lp.rhs[s == "L"], -lp.rhs[s == "G"]])
    eq = s == "E"
    bounds = list(zip(np.where(np.isfinite(lp.lower), lp.lower, None),
                      np.where(np.isfinite(lp.upper), lp.upper, None)))
    res = linprog(lp.c, A_ub=A_ub if b_ub.size else None, b_ub=b_ub if b_ub.size else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=lp.rhs[eq] if eq.any() else None,
                  bounds=bounds, method="highs")
    return {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[res.status], res.fun


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_matches_tableau_oracle_on_canonical_lps(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
    A = np.round(rng.uniform(-1, 3, (m, n)), 1)
    b = np.round(rng.uniform(0, 5, m), 1)
    c = np.round(rng.normal(size=n), 1)
    ref_status, ref_obj = tableau_simplex(c, A, b)
    lp = LinearProgram(c, A, ["L"] * m, b, np.zeros(n), np.full(n, np.inf), np.zeros(n, bool))
    res = solve_lp(lp)
    assert res.status == ref_status
    if ref_status == OPTIMAL:
        assert res.objective == pytest.approx(ref_obj, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_matches_highs_and_satisfies_duality(seed):
    lp = random_lp(np.random.default_rng(seed))
    res = solve_lp(lp)
    ref_status, ref_obj = highs_reference(lp)
    assert res.status == ref_status
    if res.status == OPTIMAL:
        assert res.objective == pytest.approx(ref_obj, rel=1e-7, abs=1e-7)
        assert lp.max_violation(res.x) <= 1e-7
        # strong duality: the Lagrangian bound of the returned duals closes the gap
        assert dual_bound(lp, res.duals) == pytest.approx(res.objective, rel=1e-7, abs=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_weak_duality_for_arbitrary_multipliers(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng)
    res = solve_lp(lp)
    if res.status != OPTIMAL:
        return
    y = rng.normal(size=lp.n_rows)
    assert dual_bound(lp, y) <= res.objective + 1e-7


def test_detects_infeasible_and_unbounded():
    lp = LinearProgram([1.0], [[1.0], [1.0]], ["L", "G"], [1.0, 2.0], [0.0], [np.inf], [False])
    assert solve_lp(lp).status == INFEASIBLE
    lp = LinearProgram([-1.0, 0.0], [[1.0, -1.0]], ["L"], [1.0], [0, 0], [np.inf, np.inf],
                       [False, False])
    assert solve_lp(lp).status == UNBOUNDED


def test_ranged_rows_and_free_variables():
    # min -x - y, x + y in [1, 3], x free, y in [0, 2], x <= 2.5
    lp = LinearProgram([-1.0, -1.0], [[1.0, 1.0], [1.0, 0.0]], ["L", "L"], [3.0, 2.5],
                       [-np.inf, 0.0], [np.inf, 2.0], [False, False], ranges=[2.0, np.nan])
    res = solve_lp(lp)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(-3.0)
    lo, hi = lp.row_bounds()
    assert lo[0] == 1.0 and hi[0] == 3.0


def test_warm_start_after_bound_change_matches_cold_solve():
    rng = np.random.default_rng(7)
    for _ in range(30):
        lp = random_lp(rng)
        eng = RevisedSimplex(lp)
        first = eng.solve()
        if first.status != OPTIMAL:
            continue
        j = int(rng.integers(lp.n_vars))
        upper = lp.upper.copy()
        upper[j] = max(lp.lower[j], np.floor(first.x[j] - 0.5)) if np.isfinite(lp.lower[j]) \
            else np.floor(first.x[j] - 0.5)
        warm = eng.solve(lp.lower, upper, first.basis)
        cold = solve_lp(lp.with_bounds(lp.lower, upper))
        assert warm.status == cold.status
        if cold.status == OPTIMAL:
            assert warm.objective == pytest.approx(cold.objective, rel=1e-8, abs=1e-8)


def test_singular_starting_basis_is_repaired():
    rng = np.random.default_rng(21)
    checked = 0
    for _ in range(40):
        lp = random_lp(rng, m_max=8, n_max=8)
        m, n = lp.n_rows, lp.n_vars
        if m < 2 or n < 1:
            continue
        # structural 0 basic twice over: the basis matrix has a repeated column
        head = np.concatenate([[0, 0], np.arange(n + 2, n + m)]).astype(np.int64)
        status = np.where(np.isfinite(np.concatenate([lp.lower, lp.row_bounds()[0]])), 1,
                          np.where(np.isfinite(np.concatenate([lp.upper, lp.row_bounds()[1]])),
                                   2, 3)).astype(np.int8)
        status[head] = 0
        ref, ref_obj = highs_reference(lp)
        res = RevisedSimplex(lp).solve(basis=(head, status))
        assert res.status == ref
        if ref == OPTIMAL:
            assert res.objective == pytest.approx(ref_obj, rel=1e-8, abs=1e-8)
            checked += 1
    assert checked > 5


def test_iteration_limit_reports_limit():
    # both row constraints must enter the basis, so one pivot cannot finish
    lp = LinearProgram([-1.0, -1.0], np.eye(2), ["L", "L"], [1.0, 1.0], [0, 0],
                       [np.inf, np.inf], [False, False])
    res = RevisedSimplex(lp, SimplexOptions(max_iter=1)).solve()
    assert res.status == LIMIT
    assert solve_lp(lp).objective == pytest.approx(-2.0)


def test_lp_validation_errors():
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], ["X"], [0.0], [0.0], [1.0], [False])
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], ["L"], [0.0], [2.0], [1.0], [False])
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], ["L"], [0.0], [0.0], [np.inf], [True])
