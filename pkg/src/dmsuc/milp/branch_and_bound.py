"""Best-first branch-and-bound on top of the bounded revised simplex."""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .lp import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult
from .simplex import RevisedSimplex, SimplexOptions

BRANCHING_RULES = ("most_fractional", "first_fractional")


@dataclass
class MILPOptions:
    """Search controls.

    Args:
        mip_gap: relative gap ``(incumbent - bound) / |incumbent|`` at which
            the search stops and reports optimal.
        node_limit: maximum number of nodes to solve (``None`` for no limit).
        time_limit: wall-clock limit in seconds.
        branching_rule: ``"most_fractional"`` or ``"first_fractional"``; ties
            always go to the lowest variable index.
        int_tol: a value within this distance of an integer counts as integral.
        abs_gap: absolute slack used when comparing bounds with the incumbent.
    """

    mip_gap: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None
    branching_rule: str = "most_fractional"
    int_tol: float = 1e-6
    abs_gap: float = 1e-9
    simplex: SimplexOptions = field(default_factory=SimplexOptions)

    def __post_init__(self):
        if self.branching_rule not in BRANCHING_RULES:
            raise ValueError(f"unknown branching rule {self.branching_rule!r}; "
                             f"choose from {', '.join(BRANCHING_RULES)}")
        if self.mip_gap < 0:
            raise ValueError("mip_gap must be non-negative")


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return float("inf")
    diff = max(incumbent - bound, 0.0)
    if diff == 0.0:
        return 0.0
    return diff / max(abs(incumbent), 1e-10)


def _pick_branch(x: np.ndarray, int_idx: np.ndarray, tol: float, rule: str) -> int:
    """Variable to branch on, or -1 when ``x`` is integral on ``int_idx``."""
    vals = x[int_idx]
    frac = np.abs(vals - np.round(vals))
    fractional = frac > tol
    if not fractional.any():
        return -1
    if rule == "first_fractional":
        return int(int_idx[np.argmax(fractional)])
    score = np.where(fractional, frac, -1.0)
    return int(int_idx[np.argmax(score)])


class _Search:
    def __init__(self, lp: LinearProgram, options: MILPOptions):
        self.lp = lp
        self.opt = options
        self.engine = RevisedSimplex(lp, replace(options.simplex))
        self.int_idx = np.flatnonzero(lp.integer)
        self.start = time.perf_counter()
        self.iterations = 0
        self.nodes = 0
        self.lp_failures = 0
        self.best_x: np.ndarray | None = None
        self.best_obj = float("inf")
        self.history: list[dict] = []

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def remaining(self) -> float | None:
        if self.opt.time_limit is None:
            return None
        return max(self.opt.time_limit - self.elapsed(), 0.0)

    def solve_node(self, lower, upper, basis) -> SolveResult:
        self.engine.opt.time_limit = self.remaining()
        res = self.engine.solve(lower, upper, basis)
        self.iterations += res.stats.get("simplex_iterations", 0)
        if res.status == LIMIT and basis is not None and not self.out_of_time():
            # numerical trouble from a warm start: retry from scratch
            res = self.engine.solve(lower, upper, None)
            self.iterations += res.stats.get("simplex_iterations", 0)
        return res

    def out_of_time(self) -> bool:
        return self.opt.time_limit is not None and self.elapsed() >= self.opt.time_limit

    def cutoff(self) -> float:
        if not np.isfinite(self.best_obj):
            return float("inf")
        return self.best_obj - max(self.opt.abs_gap, self.opt.mip_gap * abs(self.best_obj))

    def offer(self, x: np.ndarray, basis=None, source: str = "search") -> bool:
        """Round the integers of ``x``, re-solve the continuous part, keep if better."""
        fixed = np.round(x[self.int_idx])
        lo = self.lp.lower.copy()
        hi = self.lp.upper.copy()
        if np.any(fixed < lo[self.int_idx] - 1e-9) or np.any(fixed > hi[self.int_idx] + 1e-9):
            return False
        lo[self.int_idx] = fixed
        hi[self.int_idx] = fixed
        res = self.solve_node(lo, hi, basis)
        if res.status != OPTIMAL:
            return False
        cand = res.x.copy()
        cand[self.int_idx] = fixed
        if self.lp.max_violation(cand) > 1e-6:
            return False
        obj = self.lp.objective(cand)
        if obj < self.best_obj - 1e-12 * max(1.0, abs(obj)):
            self.best_obj = obj
            self.best_x = cand
            self.history.append({"node": self.nodes, "time": self.elapsed(),
                                 "objective": obj, "source": source})
            return True
        return False


def solve_milp(lp: LinearProgram, options: MILPOptions | None = None,
               incumbent: np.ndarray | None = None) -> SolveResult:
    """Minimise ``lp`` with its integrality marks by best-first branch-and-bound.

    Nodes are processed in order of their parent's LP bound (ties first in,
    first out); each child LP restarts from the parent's optimal basis.

    Args:
        lp: the problem; every integer variable must have finite bounds.
        options: search controls, see :class:`MILPOptions`.
        incumbent: optional starting point whose integer part is rounded,
            fixed and completed by an LP solve to seed the incumbent.

    Returns:
        A :class:`SolveResult` whose ``stats`` holds ``simplex_iterations``,
        ``nodes``, ``wall_time`` and ``incumbent_history``.
    """
    opt = options or MILPOptions()
    search = _Search(lp, opt)

    def finish(status, bound, message=""):
        x = search.best_x
        obj = search.best_obj if x is not None else float("nan")
        gap = relative_gap(search.best_obj, bound) if x is not None else float("inf")
        stats = {"simplex_iterations": search.iterations, "nodes": search.nodes,
                 "wall_time": search.elapsed(), "incumbent_history": list(search.history),
                 "lp_failures": search.lp_failures}
        return SolveResult(status, None if x is None else x.copy(), obj, gap, bound, stats,
                           message=message)

    root = search.solve_node(lp.lower, lp.upper, None)
    search.nodes = 1
    if root.status == INFEASIBLE:
        return finish(INFEASIBLE, float("inf"), "relaxation infeasible")
    if root.status == UNBOUNDED:
        return finish(UNBOUNDED, -float("inf"), "relaxation unbounded")
    if root.status != OPTIMAL:
        return finish(LIMIT, -float("inf"), root.message or "root relaxation not solved")

    if incumbent is not None and search.int_idx.size:
        search.offer(np.asarray(incumbent, dtype=float), root.basis, source="start")

    queue: list = []
    seq = itertools.count()
    heapq.heappush(queue, (root.objective, next(seq), lp.lower, lp.upper, root.basis, root))
    unresolved_bound = float("inf")
    pruned_bound = float("inf")

    while queue:
        bound = min(queue[0][0], unresolved_bound)
        if np.isfinite(search.best_obj) and bound >= search.cutoff():
            pruned_bound = bound
            queue.clear()
            break
        if opt.node_limit is not None and search.nodes >= opt.node_limit:
            return finish(LIMIT, bound, "node limit")
        if search.out_of_time():
            return finish(LIMIT, bound, "time limit")

        parent_bound, _, lo, hi, basis, res = heapq.heappop(queue)
        if res is None:
            res = search.solve_node(lo, hi, basis)
            search.nodes += 1
            if res.status == INFEASIBLE:
                continue
            if res.status != OPTIMAL:
                search.lp_failures += 1
                if search.out_of_time():
                    return finish(LIMIT, min(parent_bound, bound), "time limit")
                unresolved_bound = min(unresolved_bound, parent_bound)
                continue
        if res.objective >= search.cutoff():
            continue

        j = _pick_branch(res.x, search.int_idx, opt.int_tol, opt.branching_rule)
        if j < 0:
            search.offer(res.x, res.basis)
            continue
        v = res.x[j]
        down_hi = hi.copy()
        down_hi[j] = np.floor(v)
        up_lo = lo.copy()
        up_lo[j] = np.ceil(v)
        heapq.heappush(queue, (res.objective, next(seq), lo, down_hi, res.basis, None))
        heapq.heappush(queue, (res.objective, next(seq), up_lo, hi, res.basis, None))

    if search.best_x is None:
        if np.isfinite(unresolved_bound):
            return finish(LIMIT, unresolved_bound, "some node relaxations failed")
        return finish(INFEASIBLE, float("inf"), "no integer-feasible point")
    bound = min(search.best_obj, unresolved_bound, pruned_bound)
    if np.isfinite(unresolved_bound) and relative_gap(search.best_obj, bound) > opt.mip_gap:
        return finish(LIMIT, bound, "some node relaxations failed")
    return finish(OPTIMAL, bound)
