"""Nodal unit-commitment MILP over a scenario tree.

Every (node, generator) pair owns a commitment ``y``, a dispatch ``x`` and
relaxed switch indicators ``su``/``sd``; units with a minimum up or down time
above one also own residual-time states ``o``/``d``. Decisions live on tree
nodes, so scenarios that share a history share decisions without extra
constraints. The root's predecessor is the carried commitment state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .milp import LIMIT, OPTIMAL, LinearProgram, MILPOptions, solve_milp
from .milp.highs import solve_milp_highs
from .scenario_tree import ScenarioTree, validate
from .system import CommitState, PowerSystem

COST_COMPONENTS = ("startup", "shutdown", "energy", "commitment", "up_reg", "down_reg")
STATE_TOL = 1e-6


class UCInfeasibleError(RuntimeError):
    """The commitment problem has no feasible schedule."""


class UCSolverLimitError(RuntimeError):
    """A solver limit was hit before any feasible schedule was found."""


@dataclass(frozen=True, eq=False)
class UCInstance:
    """System, tree and carried state that together define one MILP.

    Args:
        system: generators and network.
        tree: augmented scenario tree of system load (MW).
        init: commitment state at the root's predecessor.
        carried_dispatch: MW output of each unit at the root's predecessor,
            used by the root ramping rows for units that were on. Units that
            were off start from 0 MW. ``None`` drops the root ramp rows of
            units that were on.
        regularize: keep the residual-time terms ``o/O_n + d/O_f`` in the
            objective (they pin the states to their smallest feasible values).
    """

    system: PowerSystem
    tree: ScenarioTree
    init: CommitState
    carried_dispatch: np.ndarray | None = None
    regularize: bool = True

    def __post_init__(self):
        problems = validate(self.tree)
        if problems:
            raise ValueError("invalid scenario tree: " + "; ".join(problems))
        self.init.check(self.system)
        if self.carried_dispatch is not None:
            cd = np.asarray(self.carried_dispatch, dtype=float).reshape(self.system.n_gens)
            if np.any(cd < -STATE_TOL):
                raise ValueError("carried dispatch must be non-negative")
            cd = np.where(np.asarray(self.init.y) == 1, np.maximum(cd, 0.0), 0.0)
            cd.flags.writeable = False
            object.__setattr__(self, "carried_dispatch", cd)

    @property
    def stateful(self) -> np.ndarray:
        """Indices of units that need residual-time states."""
        return np.array([i for i, g in enumerate(self.system.generators) if g.has_state],
                        dtype=np.int64)


@dataclass
class UCLayout:
    """Column and row bookkeeping of a built MILP.

    ``y``, ``x``, ``su``, ``sd``, ``o`` and ``d`` are ``(nodes, generators)``
    arrays of column indices; ``o``/``d`` hold ``-1`` for units without state.
    ``row_family`` names the constraint family of every row.
    """

    y: np.ndarray
    x: np.ndarray
    su: np.ndarray
    sd: np.ndarray
    o: np.ndarray
    d: np.ndarray
    row_family: list[str]
    row_node: np.ndarray
    row_gen: np.ndarray

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for f in self.row_family:
            out[f] = out.get(f, 0) + 1
        return out


class _Rows:
    def __init__(self):
        self.r: list[int] = []
        self.c: list[int] = []
        self.v: list[float] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.ranges: list[float] = []
        self.family: list[str] = []
        self.node: list[int] = []
        self.gen: list[int] = []

    def add(self, coefs: dict[int, float], sense: str, rhs: float, family: str,
            node: int, gen: int = -1, rng: float = np.nan) -> None:
        i = len(self.sense)
        for col, val in coefs.items():
            if val != 0:
                self.r.append(i)
                self.c.append(col)
                self.v.append(float(val))
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.ranges.append(rng)
        self.family.append(family)
        self.node.append(node)
        self.gen.append(gen)


def _lin(*terms) -> dict[int, float]:
    """Sum ``(coef, column)`` terms; a column of ``None`` marks a constant (skipped)."""
    out: dict[int, float] = {}
    for coef, col in terms:
        if col is None:
            continue
        out[col] = out.get(col, 0.0) + coef
    return out


def build_milp(instance: UCInstance) -> tuple[LinearProgram, UCLayout]:
    """Assemble the commitment MILP for ``instance``.

    Returns:
        The problem and the layout that maps its columns and rows back to
        (node, generator) pairs.
    """
    sys_, tree = instance.system, instance.tree
    gens = sys_.generators
    N, G = tree.n_nodes, sys_.n_gens
    pi = tree.probabilities()
    stateful = set(instance.stateful.tolist())

    idx = np.arange(N * G).reshape(N, G)
    y, x, su, sd = idx, idx + N * G, idx + 2 * N * G, idx + 3 * N * G
    n_cols = 4 * N * G
    o = np.full((N, G), -1, dtype=np.int64)
    d = np.full((N, G), -1, dtype=np.int64)
    for g in sorted(stateful):
        o[:, g] = n_cols + np.arange(N)
        n_cols += N
    for g in sorted(stateful):
        d[:, g] = n_cols + np.arange(N)
        n_cols += N

    c = np.zeros(n_cols)
    lower = np.zeros(n_cols)
    upper = np.full(n_cols, np.inf)
    integer = np.zeros(n_cols, dtype=bool)
    integer[y.ravel()] = True
    upper[y.ravel()] = 1.0
    upper[su.ravel()] = 1.0
    upper[sd.ravel()] = 1.0
    for gi, gen in enumerate(gens):
        upper[x[:, gi]] = gen.p_max
        c[y[:, gi]] = pi * gen.c0
        c[x[:, gi]] = pi * gen.c1
        c[su[:, gi]] = pi * gen.startup_cost
        c[sd[:, gi]] = pi * gen.shutdown_cost
        if gi in stateful:
            upper[o[:, gi]] = gen.min_up - 1
            upper[d[:, gi]] = gen.min_down - 1
            if instance.regularize:
                c[o[:, gi]] = pi / gen.min_up
                c[d[:, gi]] = pi / gen.min_down

    rows = _Rows()
    net = sys_.network
    bus_of = sys_.gen_bus_index()
    share = net.load_share
    init_y = np.asarray(instance.init.y, dtype=float)
    init_o = np.asarray(instance.init.o, dtype=float)
    init_d = np.asarray(instance.init.d, dtype=float)
    carried = instance.carried_dispatch

    for v in range(N):
        load = float(tree.value[v])
        rows.add({int(x[v, g]): 1.0 for g in range(G)}, "E", load, "balance", v)
        if net.lines:
            base = net.ptdf @ (share * load)
            for li, line in enumerate(net.lines):
                coefs = {int(x[v, g]): net.ptdf[li, bus_of[g]] for g in range(G)}
                rows.add(coefs, "L", line.limit + base[li], "line_flow", v, -1,
                         rng=2.0 * line.limit)

        p = int(tree.parent[v])
        for g, gen in enumerate(gens):
            yv, xv, suv, sdv = int(y[v, g]), int(x[v, g]), int(su[v, g]), int(sd[v, g])
            # parent terms: a column index, or (None, constant) at the root
            if p >= 0:
                yp, yp0 = int(y[p, g]), 0.0
                xp, xp0 = int(x[p, g]), 0.0
            else:
                yp, yp0 = None, init_y[g]
                xp, xp0 = None, (0.0 if carried is None else carried[g])

            rows.add({xv: 1.0, yv: -gen.p_max}, "L", 0.0, "capacity_max", v, g)
            rows.add({xv: 1.0, yv: -gen.p_min}, "G", 0.0, "capacity_min", v, g)
            # su >= y - y_parent ; sd = y_parent - y + su
            rows.add(_lin((1.0, yv), (-1.0, suv), (-1.0, yp)), "L", yp0, "switch_on", v, g)
            rows.add(_lin((1.0, sdv), (1.0, yv), (-1.0, suv), (-1.0, yp)), "E", yp0,
                     "switch_off", v, g)
            if p >= 0 or carried is not None or init_y[g] == 0:
                # x - x_parent <= ramp_up * y ; x - x_parent >= -ramp_down * y_parent
                rows.add(_lin((1.0, xv), (-gen.ramp_up, yv), (-1.0, xp)), "L", xp0,
                         "ramp_up", v, g)
                rows.add(_lin((1.0, xv), (-1.0, xp), (gen.ramp_down, yp)), "G",
                         xp0 - gen.ramp_down * yp0, "ramp_down", v, g)

            if g not in stateful:
                continue
            on_len, off_len = gen.min_up - 1, gen.min_down - 1
            ov, dv = int(o[v, g]), int(d[v, g])
            if p >= 0:
                op, op0, dp, dp0 = int(o[p, g]), 0.0, int(d[p, g]), 0.0
            else:
                op, op0, dp, dp0 = None, init_o[g], None, init_d[g]
            rows.add({ov: 1.0, suv: -on_len}, "G", 0.0, "min_up_start", v, g)
            # o >= o_parent - y; also the "stay on while counting down" rule
            rows.add(_lin((1.0, ov), (1.0, yv), (-1.0, op)), "G", op0, "min_up_decrease", v, g)
            rows.add(_lin((1.0, ov), (-1.0, op), (-on_len, suv)), "L", op0, "min_up_upper", v, g)
            rows.add({ov: 1.0, yv: -on_len}, "L", 0.0, "min_up_off", v, g)
            rows.add({dv: 1.0, sdv: -off_len}, "G", 0.0, "min_down_start", v, g)
            # d >= d_parent - 1 + y; also the "stay off while counting down" rule
            rows.add(_lin((1.0, dv), (-1.0, yv), (-1.0, dp)), "G", dp0 - 1.0,
                     "min_down_decrease", v, g)
            rows.add(_lin((1.0, dv), (-1.0, dp), (-off_len, sdv)), "L", dp0,
                     "min_down_upper", v, g)
            rows.add({dv: 1.0, yv: off_len}, "L", off_len, "min_down_on", v, g)

    col_names = []
    for name, block in (("y", y), ("x", x), ("su", su), ("sd", sd)):
        col_names += [f"{name}_{v}_{g}" for v in range(N) for g in range(G)]
    for name, block in (("o", o), ("d", d)):
        for g in sorted(stateful):
            col_names += [f"{name}_{v}_{g}" for v in range(N)]
    lp = LinearProgram.from_triplets(
        c, rows.r, rows.c, rows.v, rows.sense, rows.rhs, lower, upper, integer,
        ranges=np.array(rows.ranges, dtype=float), col_names=col_names,
        row_names=[f"{f}_{n}_{g}" for f, n, g in zip(rows.family, rows.node, rows.gen)],
        name="DMSUC")
    layout = UCLayout(y, x, su, sd, o, d, rows.family, np.array(rows.node, dtype=np.int64),
                      np.array(rows.gen, dtype=np.int64))
    return lp, layout


@dataclass(eq=False)
class UCSolution:
    """Schedule on every tree node; arrays are ``(nodes, generators)``.

    ``breakdown`` maps each cost component to its per-node value and
    ``nodal_costs`` is their sum; ``objective`` is the probability-weighted
    total that the solver minimised.
    """

    generator_ids: tuple[str, ...]
    y: np.ndarray
    x: np.ndarray
    su: np.ndarray
    sd: np.ndarray
    o: np.ndarray
    d: np.ndarray
    probabilities: np.ndarray
    breakdown: dict[str, np.ndarray]
    objective: float
    status: str = OPTIMAL
    gap: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def nodal_costs(self) -> np.ndarray:
        return sum(self.breakdown[k] for k in COST_COMPONENTS)

    @property
    def n_nodes(self) -> int:
        return self.y.shape[0]

    def total_output(self) -> np.ndarray:
        """Scheduled production per node, MW."""
        return self.x.sum(axis=1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UCSolution):
            return NotImplemented
        arrays = ("y", "x", "su", "sd", "o", "d", "probabilities")
        return (self.generator_ids == other.generator_ids
                and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
                and all(np.array_equal(self.breakdown[k], other.breakdown[k])
                        for k in COST_COMPONENTS)
                and self.objective == other.objective and self.status == other.status)


def cost_breakdown(system: PowerSystem, y, x, su, sd, o, d) -> dict[str, np.ndarray]:
    """Per-node cost components of a schedule."""
    f = system.field
    min_up, min_down = f("min_up"), f("min_down")
    return {
        "startup": su @ f("startup_cost"),
        "shutdown": sd @ f("shutdown_cost"),
        "energy": x @ f("c1"),
        "commitment": y @ f("c0"),
        "up_reg": o @ (1.0 / min_up),
        "down_reg": d @ (1.0 / min_down),
    }


def make_solution(instance: UCInstance, y, x, su, sd, o, d, status: str = OPTIMAL,
                  gap: float = 0.0, stats: dict | None = None) -> UCSolution:
    """Wrap raw schedule arrays and compute their costs."""
    arrays = [np.array(a, dtype=float) for a in (y, x, su, sd, o, d)]
    br = cost_breakdown(instance.system, *arrays)
    if not instance.regularize:
        br["up_reg"] = np.zeros_like(br["up_reg"])
        br["down_reg"] = np.zeros_like(br["down_reg"])
    pi = instance.tree.probabilities()
    nodal = sum(br[k] for k in COST_COMPONENTS)
    # same summation as the ex-post accounting, so single paths agree bit for bit
    return UCSolution(tuple(g.id for g in instance.system.generators), *arrays,
                      probabilities=pi, breakdown=br, objective=float(np.sum(pi * nodal)),
                      status=status, gap=gap, stats=dict(stats or {}))


def decode(instance: UCInstance, layout: UCLayout, values: np.ndarray, status: str = OPTIMAL,
           gap: float = 0.0, stats: dict | None = None) -> UCSolution:
    """Turn a MILP primal vector into a :class:`UCSolution` (``y`` rounded)."""
    values = np.asarray(values, dtype=float)

    def take(cols):
        return np.where(cols >= 0, values[np.maximum(cols, 0)], 0.0)

    return make_solution(instance, np.round(take(layout.y)), take(layout.x), take(layout.su),
                         take(layout.sd), take(layout.o), take(layout.d), status, gap, stats)


def encode(layout: UCLayout, solution: UCSolution, n_cols: int) -> np.ndarray:
    """Inverse of :func:`decode`: place a schedule into a MILP vector."""
    z = np.zeros(n_cols)
    for name in ("y", "x", "su", "sd", "o", "d"):
        cols = getattr(layout, name)
        mask = cols >= 0
        z[cols[mask]] = getattr(solution, name)[mask]
    return z


def nodal_cost(solution: UCSolution, node: int) -> dict[str, float]:
    """Cost components of one node (unweighted)."""
    if not 0 <= node < solution.n_nodes:
        raise KeyError(f"node {node} is not in the solution")
    return {k: float(solution.breakdown[k][node]) for k in COST_COMPONENTS}


@dataclass(frozen=True)
class Violation:
    node: int
    generator: str | None
    family: str
    slack: float

    def __str__(self) -> str:
        who = f", generator {self.generator}" if self.generator is not None else ""
        return f"node {self.node}{who}: {self.family} violated by {-self.slack:.6g}"


def check_feasibility(solution: UCSolution, instance: UCInstance, tol: float = 1e-6
                      ) -> list[Violation]:
    """List every constraint of ``instance`` that ``solution`` violates beyond ``tol``.

    The check evaluates each constraint family directly on the schedule arrays
    and does not use the assembled matrix. ``slack`` is negative for a
    violation.
    """
    sys_, tree = instance.system, instance.tree
    gens = sys_.generators
    N, G = tree.n_nodes, sys_.n_gens
    y, x, su, sd, o, d = (solution.y, solution.x, solution.su, solution.sd,
                          solution.o, solution.d)
    if y.shape != (N, G):
        return [Violation(-1, None, "shape", -float("inf"))]
    out: list[Violation] = []

    def report(mask_slack: np.ndarray, family: str, per_gen: bool = True):
        bad = np.argwhere(mask_slack < -tol)
        for pos in bad:
            v = int(pos[0])
            g = gens[int(pos[1])].id if per_gen and mask_slack.ndim == 2 else None
            out.append(Violation(v, g, family, float(mask_slack[tuple(pos)])))

    report(-np.abs(y - np.round(y)), "integrality")
    report(np.minimum(y, 1 - y), "commitment_bounds")
    report(np.minimum(su, 1 - su), "startup_bounds")
    report(np.minimum(sd, 1 - sd), "shutdown_bounds")
    report(x, "dispatch_nonnegative")

    load = tree.value
    imbalance = x.sum(axis=1) - load
    report(-np.abs(imbalance)[:, None], "balance", per_gen=False)
    net = sys_.network
    if net.lines:
        bus_of = sys_.gen_bus_index()
        inj = np.zeros((N, len(net.buses)))
        np.add.at(inj, (slice(None), bus_of), x)
        inj -= load[:, None] * net.load_share[None, :]
        flow = inj @ net.ptdf.T
        limit = np.array([ln.limit for ln in net.lines])
        for v, li in np.argwhere(np.abs(flow) > limit + tol):
            out.append(Violation(int(v), None, f"line_flow[{net.lines[li].id}]",
                                 float(limit[li] - abs(flow[v, li]))))

    p_min, p_max = sys_.field("p_min"), sys_.field("p_max")
    report(p_max * y - x, "capacity_max")
    report(x - p_min * y, "capacity_min")

    par = tree.parent
    init_y = np.asarray(instance.init.y, dtype=float)
    root = par < 0
    yp = np.where(root[:, None], init_y[None, :], y[np.maximum(par, 0)])
    report(su - (y - yp), "switch_on")
    report(-np.abs(sd - (yp - y + su)), "switch_off")

    ramp_up, ramp_down = sys_.field("ramp_up"), sys_.field("ramp_down")
    carried = instance.carried_dispatch
    xp = x[np.maximum(par, 0)].copy()
    ramp_mask = np.ones((N, G), dtype=bool)
    if carried is None:
        xp[root] = 0.0
        ramp_mask[root] = init_y == 0
    else:
        xp[root] = carried
    report(np.where(ramp_mask, ramp_up * y - (x - xp), 0.0), "ramp_up")
    report(np.where(ramp_mask, (x - xp) + ramp_down * yp, 0.0), "ramp_down")

    st = instance.stateful
    if st.size:
        on_len = sys_.field("min_up")[st] - 1
        off_len = sys_.field("min_down")[st] - 1
        ys, sus, sds, os_, ds = y[:, st], su[:, st], sd[:, st], o[:, st], d[:, st]
        op = np.where(root[:, None], np.asarray(instance.init.o, float)[st][None, :],
                      os_[np.maximum(par, 0)])
        dp = np.where(root[:, None], np.asarray(instance.init.d, float)[st][None, :],
                      ds[np.maximum(par, 0)])
        sub = [gens[i] for i in st]

        def report_st(slack, family):
            for v, k in np.argwhere(slack < -tol):
                out.append(Violation(int(v), sub[k].id, family, float(slack[v, k])))

        report_st(os_, "min_up_nonnegative")
        report_st(ds, "min_down_nonnegative")
        report_st(os_ - sus * on_len, "min_up_start")
        report_st(os_ - (op - ys), "min_up_decrease")
        report_st(op + sus * on_len - os_, "min_up_upper")
        report_st(on_len * ys - os_, "min_up_off")
        report_st(ds - sds * off_len, "min_down_start")
        report_st(ds - (dp - 1 + ys), "min_down_decrease")
        report_st(dp + sds * off_len - ds, "min_down_upper")
        report_st(off_len * (1 - ys) - ds, "min_down_on")
    return out


@dataclass
class ScenarioSchedule:
    """Decisions along one root-to-leaf path; arrays are ``(T, generators)``."""

    leaf: int
    nodes: tuple[int, ...]
    probability: float
    y: np.ndarray
    x: np.ndarray
    su: np.ndarray
    sd: np.ndarray
    o: np.ndarray
    d: np.ndarray


def expand_to_scenarios(solution: UCSolution, tree: ScenarioTree) -> list[ScenarioSchedule]:
    """One decision trajectory per leaf, in leaf-id order."""
    pi = tree.probabilities()
    out = []
    for leaf in tree.leaves():
        nodes = tree.path_nodes(leaf)
        out.append(ScenarioSchedule(leaf, tuple(nodes), float(pi[leaf]),
                                    *(getattr(solution, a)[nodes].copy()
                                      for a in ("y", "x", "su", "sd", "o", "d"))))
    return out


def priority_commitment(instance: UCInstance) -> np.ndarray:
    """Commitment guess per node: cheapest units until capacity covers the load.

    Units with a pending minimum up (down) time stay on (off). The result is a
    ``(nodes, generators)`` 0/1 array meant as a starting incumbent; it may be
    infeasible when ramping or network limits bind.
    """
    sys_, tree = instance.system, instance.tree
    gens = sys_.generators
    N, G = tree.n_nodes, sys_.n_gens
    p_max, p_min = sys_.field("p_max"), sys_.field("p_min")
    full_cost = sys_.field("c1") + sys_.field("c0") / np.maximum(p_max, 1e-9)
    order = np.lexsort((np.arange(G), full_cost))
    min_up = np.array([g.min_up for g in gens])
    min_down = np.array([g.min_down for g in gens])
    y = np.zeros((N, G))
    o = np.zeros((N, G))
    d = np.zeros((N, G))
    for v in np.argsort(tree.stage, kind="stable"):
        p = tree.parent[v]
        if p < 0:
            yp = np.asarray(instance.init.y, float)
            op = np.asarray(instance.init.o, float)
            dp = np.asarray(instance.init.d, float)
        else:
            yp, op, dp = y[p], o[p], d[p]
        must_on = op >= 1
        must_off = dp >= 1
        on = must_on.copy()
        load = tree.value[v]
        for g in order:
            if p_max[on].sum() >= load:
                break
            if not must_off[g]:
                on[g] = True
        for g in order[::-1]:
            if p_min[on].sum() <= load:
                break
            if on[g] and not must_on[g]:
                on[g] = False
        y[v] = on
        start = on & (yp < 0.5)
        stop = ~on & (yp > 0.5)
        o[v] = np.where(start, min_up - 1, np.where(on, np.maximum(op - 1, 0), 0))
        d[v] = np.where(stop, min_down - 1, np.where(~on, np.maximum(dp - 1, 0), 0))
    return y


BACKENDS = ("internal", "highs", "auto")


@dataclass
class SolveOptions:
    """Backend choice and search controls for :func:`solve_uc`.

    Args:
        backend: ``"internal"`` (branch-and-bound in this package), ``"highs"``
            or ``"auto"``, which uses the internal solver up to
            ``binary_threshold`` binaries and HiGHS above it.
        milp: gap and limits passed to the chosen backend.
        binary_threshold: switch-over size for ``"auto"``.
        heuristic: seed the internal search with :func:`priority_commitment`.
    """

    backend: str = "auto"
    milp: MILPOptions = field(default_factory=MILPOptions)
    binary_threshold: int = 200
    heuristic: bool = True

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {', '.join(BACKENDS)}")


def solve_uc(instance: UCInstance, options: SolveOptions | None = None) -> UCSolution:
    """Build, solve and decode the commitment MILP of ``instance``.

    Raises:
        UCInfeasibleError: when no feasible schedule exists.
        UCSolverLimitError: when a limit stops the search without a schedule.
    """
    opt = options or SolveOptions()
    lp, layout = build_milp(instance)
    backend = opt.backend
    if backend == "auto":
        backend = "internal" if lp.n_integer <= opt.binary_threshold else "highs"
    if backend == "highs":
        res = solve_milp_highs(lp, opt.milp)
    else:
        start = None
        if opt.heuristic:
            start = np.zeros(lp.n_vars)
            start[layout.y.ravel()] = priority_commitment(instance).ravel()
        res = solve_milp(lp, opt.milp, incumbent=start)
    res.stats["backend"] = backend
    res.stats["n_binaries"] = lp.n_integer
    res.stats["n_rows"] = lp.n_rows
    res.stats["n_cols"] = lp.n_vars
    if res.x is None:
        if res.status == LIMIT:
            raise UCSolverLimitError(f"solver stopped without a schedule: {res.message}")
        raise UCInfeasibleError(f"commitment problem is {res.status}: {res.message}")
    return decode(instance, layout, res.x, res.status, res.gap, res.stats)


# -- serialization -----------------------------------------------------------------

def solution_to_dict(solution: UCSolution, tree: ScenarioTree | None = None) -> dict:
    nodes = []
    for v in range(solution.n_nodes):
        entry = {"id": v, "probability": float(solution.probabilities[v]),
                 "cost": nodal_cost(solution, v)}
        if tree is not None:
            entry["stage"] = int(tree.stage[v])
            entry["load"] = float(tree.value[v])
        for a in ("y", "x", "su", "sd", "o", "d"):
            entry[a] = [float(t) for t in getattr(solution, a)[v]]
        nodes.append(entry)
    stats = {k: v for k, v in solution.stats.items()
             if isinstance(v, (int, float, str, bool, type(None)))}
    return {"generators": list(solution.generator_ids), "objective": solution.objective,
            "status": solution.status, "gap": solution.gap, "stats": stats, "nodes": nodes}


def solution_from_dict(doc: dict) -> UCSolution:
    nodes = sorted(doc["nodes"], key=lambda e: e["id"])
    arr = {a: np.array([e[a] for e in nodes], dtype=float).reshape(len(nodes), -1)
           for a in ("y", "x", "su", "sd", "o", "d")}
    br = {k: np.array([e["cost"][k] for e in nodes], dtype=float) for k in COST_COMPONENTS}
    return UCSolution(tuple(doc["generators"]), arr["y"], arr["x"], arr["su"], arr["sd"],
                      arr["o"], arr["d"],
                      probabilities=np.array([e["probability"] for e in nodes], dtype=float),
                      breakdown=br, objective=float(doc["objective"]), status=doc["status"],
                      gap=float(doc["gap"]), stats=dict(doc.get("stats", {})))


def save_solution(solution: UCSolution, path: str | Path, tree: ScenarioTree | None = None
                  ) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(solution, tree), indent=1,
                                     sort_keys=True) + "\n")


def load_solution(path: str | Path) -> UCSolution:
    return solution_from_dict(json.loads(Path(path).read_text()))
