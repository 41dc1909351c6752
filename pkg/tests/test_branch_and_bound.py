import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from dmsuc.milp import (INFEASIBLE, LIMIT, OPTIMAL, LinearProgram, MILPOptions, relative_gap,
                        solve_milp)
from dmsuc.milp.highs import solve_milp_highs


def random_milp(rng, n_max=6, m_max=5, ub=2.0):
    m, n = int(rng.integers(1, m_max + 1)), int(rng.integers(1, n_max + 1))
    A = np.round(rng.normal(size=(m, n)), 1)
    x0 = rng.integers(0, int(ub) + 1, n).astype(float)
    sense = rng.choice(["L", "E", "G"], m, p=[0.6, 0.1, 0.3])
    act = A @ x0
    rhs = np.where(sense == "L", act + rng.uniform(0, 2, m),
                   np.where(sense == "G", act - rng.uniform(0, 2, m), act))
    if rng.random() < 0.2:
        rhs = rhs + rng.normal(size=m)
    integer = rng.random(n) < 0.6
    c = np.round(rng.normal(size=n), 1)
    return LinearProgram(c, A, sense, rhs, np.zeros(n), np.full(n, ub), integer)


def enumerate_milp(lp):
    """Oracle: every integer assignment, continuous part by an LP."""
    ints = np.flatnonzero(lp.integer)
    conts = np.flatnonzero(~lp.integer)
    A = lp.A.toarray()
    lo, hi = lp.row_bounds()
    best = None
    ranges = [range(int(lp.lower[j]), int(lp.upper[j]) + 1) for j in ints]
    for vals in itertools.product(*ranges):
        fixed = A[:, ints] @ np.array(vals, dtype=float) if ints.size else np.zeros(lp.n_rows)
        base = float(lp.c[ints] @ np.array(vals, dtype=float)) if ints.size else 0.0
        if conts.size == 0:
            if np.all(fixed >= lo - 1e-9) and np.all(fixed <= hi + 1e-9):
                val = base
            else:
                continue
        else:
            Ac = A[:, conts]
            fin_hi, fin_lo = np.isfinite(hi), np.isfinite(lo)
            A_ub = np.vstack([Ac[fin_hi], -Ac[fin_lo]])
            b_ub = np.concatenate([hi[fin_hi] - fixed[fin_hi], -(lo[fin_lo] - fixed[fin_lo])])
            res = linprog(lp.c[conts], A_ub=A_ub, b_ub=b_ub,
                          bounds=list(zip(lp.lower[conts], lp.upper[conts])), method="highs")
            if res.status != 0:
                continue
            val = base + res.fun
        if best is None or val < best:
            best = val
    return best


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_matches_enumeration(seed):
    lp = random_milp(np.random.default_rng(seed))
    ref = enumerate_milp(lp)
    res = solve_milp(lp, MILPOptions(mip_gap=0))
    if ref is None:
        assert res.status == INFEASIBLE
        return
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(ref, rel=1e-6, abs=1e-6)
    x = res.x
    assert lp.max_violation(x) <= 1e-6
    assert np.all(np.abs(x[lp.integer] - np.round(x[lp.integer])) <= 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_agrees_with_highs(seed):
    lp = random_milp(np.random.default_rng(seed), n_max=9, m_max=7, ub=3.0)
    ours = solve_milp(lp, MILPOptions(mip_gap=0))
    ref = solve_milp_highs(lp, MILPOptions(mip_gap=0), presolve=False)
    assert ours.status == ref.status
    if ours.status == OPTIMAL:
        assert ours.objective == pytest.approx(ref.objective, rel=1e-6, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_incumbent_history_and_bound(seed):
    lp = random_milp(np.random.default_rng(seed), n_max=8)
    res = solve_milp(lp, MILPOptions(mip_gap=0))
    if res.status != OPTIMAL:
        return
    hist = [h["objective"] for h in res.stats["incumbent_history"]]
    assert hist and all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
    assert hist[-1] == pytest.approx(res.objective)
    assert res.bound <= res.objective + 1e-9
    assert res.gap <= 1e-9


def test_branching_rules_agree():
    rng = np.random.default_rng(5)
    for _ in range(25):
        lp = random_milp(rng, n_max=7)
        a = solve_milp(lp, MILPOptions(mip_gap=0, branching_rule="most_fractional"))
        b = solve_milp(lp, MILPOptions(mip_gap=0, branching_rule="first_fractional"))
        assert a.status == b.status
        if a.status == OPTIMAL:
            assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)


def knapsack(n=30, seed=3):
    rng = np.random.default_rng(seed)
    w = rng.integers(5, 40, n).astype(float)
    v = w + rng.integers(-4, 5, n)
    return LinearProgram(-v, [w], ["L"], [w.sum() / 2 + 0.5], np.zeros(n), np.ones(n),
                         np.ones(n, bool))


def test_node_limit_returns_incumbent_with_gap():
    lp = knapsack()
    bare = solve_milp(lp, MILPOptions(mip_gap=0, node_limit=1))
    assert bare.status == LIMIT
    if bare.x is None:
        assert bare.gap == np.inf
    res = solve_milp(lp, MILPOptions(mip_gap=0, node_limit=3), incumbent=np.zeros(lp.n_vars))
    assert res.status == LIMIT
    assert res.x is not None
    assert res.bound <= res.objective
    assert res.gap == pytest.approx(relative_gap(res.objective, res.bound))
    full = solve_milp(lp, MILPOptions(mip_gap=0))
    assert full.status == OPTIMAL
    assert full.objective <= res.objective + 1e-9
    assert full.bound >= res.bound - 1e-9


def test_starting_incumbent_is_used():
    lp = knapsack(12)
    ref = solve_milp(lp, MILPOptions(mip_gap=0))
    res = solve_milp(lp, MILPOptions(mip_gap=0), incumbent=np.zeros(lp.n_vars))
    assert res.stats["incumbent_history"][0]["source"] != "search"
    assert res.objective == pytest.approx(ref.objective)


def test_relative_gap_definition():
    assert relative_gap(10.0, 9.0) == pytest.approx(0.1)
    assert relative_gap(10.0, 11.0) == 0.0
    assert relative_gap(0.0, -1.0) == pytest.approx(1e10)


def test_options_validation():
    with pytest.raises(ValueError):
        MILPOptions(mip_gap=-1)
    with pytest.raises(ValueError):
        MILPOptions(branching_rule="random")
