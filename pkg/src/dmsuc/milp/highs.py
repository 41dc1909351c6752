"""Bridge to the HiGHS MILP solver shipped with SciPy."""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .branch_and_bound import MILPOptions, relative_gap
from .lp import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult

_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}


def solve_milp_highs(lp: LinearProgram, options: MILPOptions | None = None,
                     presolve: bool = True) -> SolveResult:
    """Solve ``lp`` with HiGHS through :func:`scipy.optimize.milp`.

    Args:
        lp: the problem.
        options: ``mip_gap``, ``time_limit`` and ``node_limit`` are honoured;
            the branching rule is HiGHS' own.
        presolve: turn HiGHS presolve on or off.
    """
    opt = options or MILPOptions()
    start = time.perf_counter()
    settings = {"mip_rel_gap": opt.mip_gap, "presolve": presolve, "disp": False}
    if opt.time_limit is not None:
        settings["time_limit"] = float(opt.time_limit)
    if opt.node_limit is not None:
        settings["node_limit"] = int(opt.node_limit)
    constraints = []
    if lp.n_rows:
        lo, hi = lp.row_bounds()
        constraints.append(LinearConstraint(lp.A, lo, hi))
    res = milp(lp.c, constraints=constraints, integrality=lp.integer.astype(np.uint8),
               bounds=Bounds(lp.lower, lp.upper), options=settings)
    status = _STATUS.get(res.status, LIMIT)
    stats = {"nodes": int(getattr(res, "mip_node_count", 0) or 0),
             "wall_time": time.perf_counter() - start, "simplex_iterations": None,
             "incumbent_history": [], "backend": "highs"}
    x = None if res.x is None else np.asarray(res.x, dtype=float)
    if x is not None and lp.n_integer:
        x = x.copy()
        x[lp.integer] = np.round(x[lp.integer])
    obj = lp.objective(x) if x is not None else float("nan")
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None and status == OPTIMAL else (
        float("nan") if bound is None else float(bound) + lp.offset)
    gap = relative_gap(obj, bound) if x is not None and np.isfinite(bound) else float("inf")
    if status == OPTIMAL:
        gap = min(gap, opt.mip_gap) if np.isfinite(gap) else 0.0
    return SolveResult(status, x, obj, gap, bound, stats, message=str(res.message))
