"""Rolling-horizon controller: solve an epoch, observe the realized load, carry the state.

Epochs are back to back: epoch ``k`` covers stages ``k*T .. k*T+T-1`` of the
realized series, and its present value is ``realized[k*T]``. After the epoch
elapses, the leaf whose path is closest to the realized trajectory decides the
commitment state handed to the next epoch.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .scenario_tree import ScenarioTree, closest_path, dumps_tree, single_path_tree
from .system import CommitState, PowerSystem
from .tree_builder import (TreeLibrary, library_epoch, select_and_augment, select_bin,
                           wait_and_see_update)
from .uc_model import (COST_COMPONENTS, SolveOptions, UCInfeasibleError, UCInstance, UCSolution,
                       UCSolverLimitError, solution_to_dict, solve_uc)

log = logging.getLogger(__name__)

ROUNDING_WARN = 1e-4
VOLATILE_STATS = ("wall_time", "incumbent_history", "time")


class EpochError(RuntimeError):
    """An epoch could not be solved; ``records`` keeps the epochs completed before it."""

    def __init__(self, message: str, records: list | None = None):
        super().__init__(message)
        self.records = list(records or [])


@dataclass(frozen=True)
class ReservePricing:
    """Prices for covering deviations between realized load and the schedule.

    Args:
        shortage_price: $/MWh for load above the schedule. ``None`` uses the
            highest energy price ``c1`` among units committed at that stage.
        surplus_penalty: $/MWh for schedule above the load. ``None`` uses
            ``surplus_ratio`` times the shortage price of the stage.
        surplus_ratio: see ``surplus_penalty``.
    """

    shortage_price: float | None = None
    surplus_penalty: float | None = None
    surplus_ratio: float = 0.1

    def __post_init__(self):
        for name in ("shortage_price", "surplus_penalty", "surplus_ratio"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class ReserveResult:
    deviations: np.ndarray
    shortage_prices: np.ndarray
    surplus_prices: np.ndarray
    cost: float


@dataclass
class EpochRecord:
    kappa: int
    tree: ScenarioTree
    solution: UCSolution
    realized: np.ndarray
    v_star: int
    path: tuple[int, ...]
    transferred_state: CommitState
    carried_dispatch: np.ndarray
    objective: float
    ex_post_cost: float
    ex_post_weighted: float
    reserve: ReserveResult
    envelope: np.ndarray
    distance: float

    @property
    def reserve_cost(self) -> float:
        return self.reserve.cost

    @property
    def envelope_violations(self) -> int:
        return int(self.envelope.sum())

    def summary_row(self) -> dict:
        return {"epoch": self.kappa, "objective": self.objective, "C_e": self.ex_post_cost,
                "C_e_weighted": self.ex_post_weighted, "reserve_cost": self.reserve.cost,
                "envelope_violations": self.envelope_violations, "v_star": self.v_star,
                "bin": self.tree.meta.get("bin", ""), "status": self.solution.status,
                "gap": self.solution.gap}


@dataclass
class SimulationResult:
    records: list[EpochRecord]
    library: TreeLibrary | None = None

    def summary(self) -> dict:
        rows = [r.summary_row() for r in self.records]
        k = len(rows)

        def mean(key):
            return float(np.mean([r[key] for r in rows])) if rows else float("nan")

        return {"epochs": k, "rows": rows,
                "sample_average_objective": mean("objective"),
                "average_C_e": mean("C_e"),
                "average_C_e_weighted": mean("C_e_weighted"),
                "total_objective": float(sum(r["objective"] for r in rows)),
                "total_C_e": float(sum(r["C_e"] for r in rows)),
                "total_reserve_cost": float(sum(r["reserve_cost"] for r in rows)),
                "total_envelope_violations": int(sum(r["envelope_violations"] for r in rows))}


# -- per-epoch pieces ---------------------------------------------------------------

def observe_and_transfer(tree: ScenarioTree, solution: UCSolution, realized: Sequence[float]
                         ) -> tuple[int, CommitState]:
    """Realized leaf and the commitment state (y, o, d) the schedule holds there.

    ``o`` and ``d`` are rounded to integers; a rounding larger than 1e-4
    triggers a warning.
    """
    realized = np.asarray(realized, dtype=float)
    if realized.shape != (tree.horizon,):
        raise ValueError(f"realized trajectory has length {realized.size}, expected {tree.horizon}")
    leaf, _ = closest_path(tree, realized)
    y = np.round(solution.y[leaf])
    o, d = solution.o[leaf], solution.d[leaf]
    ro, rd = np.round(o), np.round(d)
    drift = max(float(np.max(np.abs(o - ro), initial=0.0)), float(np.max(np.abs(d - rd), initial=0.0)))
    if drift > ROUNDING_WARN:
        warnings.warn(f"residual times at leaf {leaf} are {drift:.3g} away from integers; rounded",
                      RuntimeWarning, stacklevel=2)
    state = CommitState(tuple(int(v) for v in y), tuple(int(max(v, 0)) for v in ro),
                        tuple(int(max(v, 0)) for v in rd))
    return leaf, state


def ex_post_cost(tree: ScenarioTree, solution: UCSolution, realized: Sequence[float],
                 weighted: bool = False) -> float:
    """Sum of nodal costs along the path closest to ``realized``.

    With ``weighted`` each node's cost is multiplied by its probability.
    """
    leaf, _ = closest_path(tree, realized)
    nodes = tree.path_nodes(leaf)
    costs = solution.nodal_costs[nodes]
    if weighted:
        costs = costs * tree.probabilities()[nodes]
    return float(np.sum(costs))


def reserve_cost(tree: ScenarioTree, solution: UCSolution, realized: Sequence[float],
                 pricing: ReservePricing, system: PowerSystem | None = None) -> ReserveResult:
    """Cost of covering ``realized - scheduled`` along the closest path."""
    realized = np.asarray(realized, dtype=float)
    leaf, _ = closest_path(tree, realized)
    nodes = tree.path_nodes(leaf)
    scheduled = solution.total_output()[nodes]
    delta = realized - scheduled
    if pricing.shortage_price is not None:
        short = np.full(delta.size, float(pricing.shortage_price))
    else:
        if system is None:
            raise ValueError("marginal shortage pricing needs the power system")
        c1 = system.field("c1")
        committed = solution.y[nodes] > 0.5
        short = np.array([c1[m].max() if m.any() else c1.max() for m in committed])
    if pricing.surplus_penalty is not None:
        surplus = np.full(delta.size, float(pricing.surplus_penalty))
    else:
        surplus = pricing.surplus_ratio * short
    cost = float(np.sum(short * np.maximum(delta, 0.0) + surplus * np.maximum(-delta, 0.0)))
    return ReserveResult(delta, short, surplus, cost)


def envelope_flags(tree: ScenarioTree, realized: Sequence[float]) -> np.ndarray:
    """Per stage, whether the realized value falls outside the tree's node values."""
    realized = np.asarray(realized, dtype=float)
    flags = np.zeros(tree.horizon, dtype=bool)
    for t in range(tree.horizon):
        vals = tree.value[tree.stage == t]
        flags[t] = realized[t] < vals.min() or realized[t] > vals.max()
    return flags


# -- tree sources -----------------------------------------------------------------

@dataclass(frozen=True)
class LibrarySource:
    """Trees from a fitted library: nearest bin to the present, root replaced."""

    library: TreeLibrary

    def __call__(self, kappa: int, present: float) -> ScenarioTree:
        k = library_epoch(self.library, kappa)
        tree = select_and_augment(self.library, k, present)
        return tree.with_root(float(present), epoch=kappa, library_epoch=k)


@dataclass(frozen=True)
class ForecastSource:
    """Single-path trees from a point forecast (deterministic baseline).

    Epoch ``k`` gets the observed present at its root followed by
    ``forecast[k*T+1 : k*T+T]``.
    """

    forecast: tuple[float, ...]
    T: int

    def __call__(self, kappa: int, present: float) -> ScenarioTree:
        start = kappa * self.T
        tail = list(self.forecast[start + 1:start + self.T])
        if len(tail) != self.T - 1:
            raise KeyError(f"forecast does not cover epoch {kappa}")
        return single_path_tree([float(present)] + tail, epoch=kappa, bin="forecast")


def make_source(source) -> Callable[[int, float], ScenarioTree]:
    if isinstance(source, TreeLibrary):
        return LibrarySource(source)
    if callable(source):
        return source
    raise TypeError("tree source must be a TreeLibrary or a callable (epoch, present) -> tree")


def run_epoch(library, kappa: int, present: float, carried: CommitState, system: PowerSystem,
              options: SolveOptions | None = None, carried_dispatch: np.ndarray | None = None
              ) -> tuple[ScenarioTree, UCSolution]:
    """Select and augment the epoch's tree, then solve the commitment MILP on it.

    Args:
        library: a :class:`TreeLibrary` or a callable ``(epoch, present) -> tree``.
        kappa: epoch index.
        present: observed load at the epoch's first stage, MW.
        carried: commitment state at the root's predecessor.
        system: the power system.
        options: solver options.
        carried_dispatch: unit outputs at the root's predecessor (ramping bridge).

    Raises:
        EpochError: when the MILP is infeasible or stops without a schedule.
    """
    tree = make_source(library)(kappa, float(present))
    inst = UCInstance(system, tree, carried, carried_dispatch)
    try:
        solution = solve_uc(inst, options)
    except (UCInfeasibleError, UCSolverLimitError) as exc:
        raise EpochError(f"epoch {kappa}: {exc}") from exc
    return tree, solution


def simulate(library, system: PowerSystem, realized_series: Sequence[float], epochs,
             pricing: ReservePricing | None = None, options: SolveOptions | None = None,
             init: CommitState | None = None, init_dispatch: np.ndarray | None = None,
             learn: bool = False, T: int | None = None) -> SimulationResult:
    """Chain epochs: solve, observe, transfer the state, account the costs.

    Args:
        library: tree library or tree source callable.
        system: the power system.
        realized_series: realized load per stage from time 0, MW.
        epochs: number of epochs ``K`` (epochs ``0..K-1``) or an explicit
            increasing sequence of consecutive epoch indices.
        pricing: reserve pricing (defaults to marginal-unit pricing).
        options: solver options.
        init: commitment state before the first epoch (default all off).
        init_dispatch: unit outputs before the first epoch.
        learn: apply a wait-and-see update to the used library entry after
            each epoch (libraries only).
        T: horizon; read from the library when omitted.

    Raises:
        EpochError: on the first failing epoch, carrying the completed records.
    """
    pricing = pricing or ReservePricing()
    source = make_source(library)
    lib = library if isinstance(library, TreeLibrary) else None
    if T is None:
        if lib is not None:
            T = int(lib.params["T"])
        elif getattr(source, "T", None) is not None:
            T = int(source.T)
        else:
            raise ValueError("horizon T is required when the tree source is not a library")
    kappas = list(range(epochs)) if isinstance(epochs, int) else [int(k) for k in epochs]
    series = np.asarray(realized_series, dtype=float)
    need = (max(kappas) + 1) * T if kappas else 0
    if series.size < need:
        raise ValueError(f"realized series has {series.size} stages, epochs need {need}")
    state = init or CommitState.all_off(system.n_gens)
    dispatch = None if init_dispatch is None else np.asarray(init_dispatch, dtype=float)
    records: list[EpochRecord] = []
    for kappa in kappas:
        window = series[kappa * T:(kappa + 1) * T]
        try:
            tree, solution = run_epoch(source, kappa, window[0], state, system, options, dispatch)
        except (EpochError, KeyError, ValueError) as exc:
            raise EpochError(f"epoch {kappa}: {exc}", records) from exc
        leaf, new_state = observe_and_transfer(tree, solution, window)
        _, dist = closest_path(tree, window)
        rec = EpochRecord(
            kappa=kappa, tree=tree, solution=solution, realized=window.copy(), v_star=leaf,
            path=tuple(tree.path_nodes(leaf)), transferred_state=new_state,
            carried_dispatch=solution.x[leaf].copy(), objective=solution.objective,
            ex_post_cost=ex_post_cost(tree, solution, window),
            ex_post_weighted=ex_post_cost(tree, solution, window, weighted=True),
            reserve=reserve_cost(tree, solution, window, pricing, system),
            envelope=envelope_flags(tree, window), distance=float(dist))
        records.append(rec)
        state, dispatch = new_state, rec.carried_dispatch
        if learn and lib is not None:
            k = library_epoch(lib, kappa)
            l = select_bin(lib, k, float(window[0]))
            lib = wait_and_see_update(lib, k, l, window)
            source = LibrarySource(lib)
    return SimulationResult(records, lib)


# -- batches ---------------------------------------------------------------------

@dataclass
class BatchJob:
    """One independent simulation chain."""

    id: str
    library: object
    system: PowerSystem
    realized: np.ndarray
    epochs: object
    pricing: ReservePricing = field(default_factory=ReservePricing)
    options: SolveOptions | None = None
    init: CommitState | None = None


def _run_job(job: BatchJob):
    res = simulate(job.library, job.system, job.realized, job.epochs, job.pricing, job.options,
                   job.init)
    return job.id, res


def simulate_batch(jobs: Sequence[BatchJob], workers: int = 1) -> dict[str, SimulationResult]:
    """Run independent chains, optionally in worker processes; results keyed and sorted by id."""
    ids = [j.id for j in jobs]
    if len(set(ids)) != len(ids):
        raise ValueError("batch job ids must be unique")
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    return dict(sorted(results, key=lambda kv: kv[0]))


# -- reports -----------------------------------------------------------------------

SUMMARY_FIELDS = ("epoch", "objective", "C_e", "C_e_weighted", "reserve_cost",
                  "envelope_violations", "v_star", "bin", "status", "gap")


def write_summary_csv(result: SimulationResult, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in (r.summary_row() for r in result.records):
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_plot_csv(result: SimulationResult, path: str | Path) -> None:
    """Long-format table: every scenario path, the realized load and the schedule per stage."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "stage", "time", "series", "leaf", "probability", "value_mw"])
        for rec in result.records:
            tree = rec.tree
            pi = tree.probabilities()
            base = rec.kappa * tree.horizon
            for leaf in tree.leaves():
                for t, v in enumerate(tree.path_nodes(leaf)):
                    w.writerow([rec.kappa, t, base + t, "scenario", leaf, repr(float(pi[leaf])),
                                repr(float(tree.value[v]))])
            output = rec.solution.total_output()
            for t, v in enumerate(rec.path):
                w.writerow([rec.kappa, t, base + t, "realized", rec.v_star, "",
                            repr(float(rec.realized[t]))])
                w.writerow([rec.kappa, t, base + t, "scheduled", rec.v_star, "",
                            repr(float(output[v]))])


def epoch_document(rec: EpochRecord) -> dict:
    doc = solution_to_dict(rec.solution, rec.tree)
    doc["stats"] = {k: v for k, v in doc["stats"].items() if k not in VOLATILE_STATS}
    doc.update({
        "epoch": rec.kappa, "v_star": rec.v_star, "path": list(rec.path),
        "realized": [float(v) for v in rec.realized],
        "transferred_state": {"y": list(rec.transferred_state.y),
                              "o": list(rec.transferred_state.o),
                              "d": list(rec.transferred_state.d)},
        "carried_dispatch": [float(v) for v in rec.carried_dispatch],
        "ex_post_cost": rec.ex_post_cost, "ex_post_weighted": rec.ex_post_weighted,
        "reserve": {"deviations": rec.reserve.deviations.tolist(),
                    "shortage_prices": rec.reserve.shortage_prices.tolist(),
                    "surplus_prices": rec.reserve.surplus_prices.tolist(),
                    "cost": rec.reserve.cost},
        "envelope": [bool(f) for f in rec.envelope],
    })
    return doc


def write_report(result: SimulationResult, out_dir: str | Path) -> dict[str, Path]:
    """Write the summary CSV and JSON, the plot CSV, and per-epoch tree and solution files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"summary_csv": out / "summary.csv", "summary_json": out / "summary.json",
             "plot_csv": out / "scenarios_long.csv"}
    write_summary_csv(result, paths["summary_csv"])
    write_plot_csv(result, paths["plot_csv"])
    summary = result.summary()
    paths["summary_json"].write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    for rec in result.records:
        p = out / f"epoch_{rec.kappa:03d}_solution.json"
        p.write_text(json.dumps(epoch_document(rec), indent=1, sort_keys=True) + "\n")
        (out / f"epoch_{rec.kappa:03d}_tree.json").write_text(dumps_tree(rec.tree))
        paths[f"epoch_{rec.kappa}"] = p
    return paths


__all__ = [
    "BatchJob", "COST_COMPONENTS", "EpochError", "EpochRecord", "ForecastSource", "LibrarySource",
    "ReservePricing", "ReserveResult", "SimulationResult", "envelope_flags", "ex_post_cost",
    "observe_and_transfer", "reserve_cost", "run_epoch", "simulate", "simulate_batch",
    "write_plot_csv", "write_report", "write_summary_csv",
]
