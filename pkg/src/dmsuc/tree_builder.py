"""Building libraries of load scenario trees from historical data.

Pipeline per decision epoch (phase within the cycle):

1. cut one length-T trajectory per historical period at that phase;
2. quantize the trajectories' present values with Lloyd-Max into ``c`` bins;
3. fit one tree per bin by stochastic approximation on the bin's trajectories.

At run time the present load picks the bin (``select_and_augment``) and, once
the horizon has elapsed, the realized trajectory refines that bin's tree
(``wait_and_see_update``).
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .scenario_tree import (ScenarioTree, dumps_tree, load_tree, probabilities_from_leaves,
                            uniform_tree)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepSchedule:
    """Robbins-Monro step sizes ``a_n = a0 / (n0 + n)``."""

    a0: float = 1.0
    n0: float = 30.0

    def __call__(self, n: int) -> float:
        return self.a0 / (self.n0 + n)


@dataclass
class SampleSlice:
    trajectories: np.ndarray  # (n_periods, T)
    epoch_phase: int

    def __post_init__(self):
        self.trajectories = np.atleast_2d(np.asarray(self.trajectories, dtype=float))

    @property
    def T(self) -> int:
        return self.trajectories.shape[1]

    def __len__(self) -> int:
        return self.trajectories.shape[0]


@dataclass(frozen=True)
class Forecaster:
    """One-step forecaster ``h`` acting on the state vector of past values.

    ``state[0]`` is the most recent value, ``state[-1]`` the oldest.
    """

    h: Callable[[np.ndarray], float]
    state_len: int

    def __call__(self, state: Sequence[float]) -> float:
        return float(self.h(np.asarray(state, dtype=float)))


def seasonal_persistence(period: int) -> Forecaster:
    """Forecast equal to the value one period earlier."""
    return Forecaster(lambda beta: beta[period - 1], period)


@dataclass
class TreeLibrary:
    """Fitted trees keyed by ``(epoch, bin)`` with their root centroids."""

    entries: dict[tuple[int, int], ScenarioTree]
    centroids: dict[tuple[int, int], float]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, tree in self.entries.items():
            if key not in self.centroids:
                raise ValueError(f"entry {key} has no centroid")
            if "T" in self.params and tree.horizon != self.params["T"]:
                raise ValueError(f"tree {key} has horizon {tree.horizon}, library T={self.params['T']}")

    @property
    def epochs(self) -> list[int]:
        return sorted({k for k, _ in self.entries})

    def bins(self, epoch: int) -> list[int]:
        return sorted(l for k, l in self.entries if k == epoch)

    def __getitem__(self, key: tuple[int, int]) -> ScenarioTree:
        return self.entries[key]

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TreeLibrary):
            return NotImplemented
        return (self.entries == other.entries and self.centroids == other.centroids
                and self.params == other.params)


# -- data slicing -------------------------------------------------------------

def cyclostationary_slices(series: Sequence[float], P: int, T: int, epoch_phase: int) -> SampleSlice:
    """One trajectory of length T per complete historical period, at ``epoch_phase``."""
    x = np.asarray(series, dtype=float)
    if not 0 <= epoch_phase < P:
        raise ValueError(f"epoch phase {epoch_phase} outside [0, {P})")
    if T < 1 or P < 1:
        raise ValueError("period and horizon must be positive")
    if x.size < P + T:
        raise ValueError(f"series of length {x.size} is too short for P={P}, T={T} "
                         f"(need at least {P + T})")
    starts = np.arange(epoch_phase, x.size - T + 1, P)
    return SampleSlice(np.stack([x[s:s + T] for s in starts]), epoch_phase)


def residual_series(series: Sequence[float], forecaster: Forecaster) -> np.ndarray:
    """Forecast residuals ``z[k] = x[k] - h(x[k-1], x[k-2], ...)``.

    The first ``state_len`` entries have no forecast and are returned as NaN.
    """
    x = np.asarray(series, dtype=float)
    z = np.full(x.size, np.nan)
    m = forecaster.state_len
    for k in range(m, x.size):
        z[k] = x[k] - forecaster(x[k - m:k][::-1])
    return z


# -- root quantization ---------------------------------------------------------

def lloyd_max_roots(presents: Sequence[float], c: int, max_iter: int = 500, tol: float = 1e-10,
                    history: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Scalar Lloyd-Max quantizer.

    Returns ascending centroids and the cell index of every sample. Samples on
    a cell boundary go to the lower cell. A cell that empties is re-seeded at
    the sample farthest from all centroids. If ``history`` is given, the
    mean-squared distortion after every assignment step is appended to it.
    """
    x = np.asarray(presents, dtype=float).ravel()
    if c < 1:
        raise ValueError("need at least one quantization bin")
    if np.unique(x).size < c:
        raise ValueError(f"need at least {c} distinct samples, got {np.unique(x).size}")

    centroids = np.quantile(x, (np.arange(c) + 0.5) / c)
    # quantiles of heavily tied data can coincide; spread them over distinct values
    if np.unique(centroids).size < c:
        distinct = np.unique(x)
        centroids = distinct[np.linspace(0, distinct.size - 1, c).round().astype(int)]
    centroids = np.sort(centroids.astype(float))

    assignment = np.zeros(x.size, dtype=np.int64)
    for _ in range(max_iter):
        mids = 0.5 * (centroids[1:] + centroids[:-1])
        assignment = np.searchsorted(mids, x, side="left")
        if history is not None:
            history.append(float(np.mean((x - centroids[assignment]) ** 2)))
        counts = np.bincount(assignment, minlength=c)
        sums = np.bincount(assignment, weights=x, minlength=c)
        new = centroids.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled]
        for l in np.flatnonzero(~filled):
            dist = np.min(np.abs(x[:, None] - new[None, :]), axis=1)
            new[l] = x[int(np.argmax(dist))]
        new = np.sort(new)
        shift = float(np.max(np.abs(new - centroids)))
        centroids = new
        if shift <= tol:
            break
    mids = 0.5 * (centroids[1:] + centroids[:-1])
    assignment = np.searchsorted(mids, x, side="left")
    return centroids, assignment


# -- stochastic approximation --------------------------------------------------

def initial_values(trajectories: np.ndarray, branching: Sequence[int]) -> np.ndarray:
    """Starting node values from per-stage empirical quantiles.

    Stage-t nodes (breadth-first order) receive the quantiles at levels
    ``(j + 0.5) / n_t``, so the children of a node spread over the part of the
    marginal range below or above its siblings' subtrees.
    """
    values = [float(np.mean(trajectories[:, 0]))]
    width = 1
    for t, b in enumerate(branching, start=1):
        width *= b
        levels = (np.arange(width) + 0.5) / width
        values.extend(np.quantile(trajectories[:, t], levels).tolist())
    return np.array(values)


@dataclass
class _FitState:
    values: np.ndarray
    counts: np.ndarray  # one counter per leaf (path), ordered by leaf id
    n: int


def _sa_step(values: np.ndarray, paths: np.ndarray, traj: np.ndarray, step: float,
             counts: np.ndarray) -> int:
    """One stochastic-approximation step in place; returns the chosen path index."""
    diff = traj[1:] - values[paths[:, 1:]]
    k = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
    nodes = paths[k, 1:]
    # gradient of the squared l2 distance; root is pinned
    values[nodes] += 2.0 * step * diff[k]
    counts[k] += 1
    return k


def fit_tree(slice_: SampleSlice | np.ndarray, structure: Sequence[int] | None = None,
             root: float | None = None, N: int = 2000, step_schedule: StepSchedule | None = None,
             seed: int | np.random.SeedSequence = 0, init: np.ndarray | None = None,
             **meta) -> ScenarioTree:
    """Fit node values and path probabilities of a fixed-graph tree.

    Args:
        slice_: trajectories of one quantization bin, shape (n, T).
        structure: children per node at stages 0..T-2 (default binary).
        root: value pinned at the root; defaults to the mean present value.
        N: number of stochastic-approximation iterations.
        step_schedule: step sizes, :class:`StepSchedule` by default.
        seed: seed for the uniform with-replacement trajectory sampler.
        init: starting node values (breadth-first); quantile start by default.

    Path probabilities are the visit frequencies ``counts / N``. Paths never
    visited keep their starting values and get probability 0.
    """
    traj = slice_.trajectories if isinstance(slice_, SampleSlice) else np.atleast_2d(
        np.asarray(slice_, dtype=float))
    n_traj, T = traj.shape
    structure = [2] * (T - 1) if structure is None else list(structure)
    if len(structure) != T - 1:
        raise ValueError(f"structure needs {T - 1} branching factors, got {len(structure)}")
    step_schedule = step_schedule or StepSchedule()
    if n_traj == 0:
        raise ValueError("cannot fit a tree without trajectories")

    skeleton = uniform_tree(structure)
    leaf_ids, paths = skeleton.path_matrix()
    n_leaves = leaf_ids.size
    if n_traj < n_leaves:
        warnings.warn(f"{n_traj} trajectories for {n_leaves} paths; resampling with replacement",
                      stacklevel=2)
    if N < n_leaves:
        raise ValueError(f"N={N} iterations cannot visit {n_leaves} paths")

    values = initial_values(traj, structure) if init is None else np.array(init, dtype=float)
    values[0] = float(np.mean(traj[:, 0])) if root is None else float(root)
    counts = np.zeros(n_leaves, dtype=np.int64)

    rng = np.random.default_rng(seed)
    picks = rng.integers(0, n_traj, size=N)
    for n in range(1, N + 1):
        _sa_step(values, paths, traj[picks[n - 1]], step_schedule(n), counts)

    return _tree_from_state(skeleton, leaf_ids, _FitState(values, counts, N), meta)


def _tree_from_state(skeleton: ScenarioTree, leaf_ids: np.ndarray, state: _FitState,
                     meta: dict) -> ScenarioTree:
    leaf_prob = state.counts / state.n
    dead = int(np.sum(state.counts == 0))
    if dead:
        warnings.warn(f"{dead} of {state.counts.size} paths were never visited; "
                      "they get probability 0", stacklevel=3)
    tree = skeleton.with_values(state.values)
    edge = probabilities_from_leaves(tree, dict(zip(leaf_ids.tolist(), leaf_prob.tolist())))
    meta = {**meta, "leaf_counts": state.counts.tolist(), "iterations": int(state.n)}
    return tree.with_probabilities(edge, **meta)


def _fit_entry(args):
    (kappa, l, traj, structure, centroid, N, schedule, seed) = args
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tree = fit_tree(traj, structure, centroid, N, schedule, seed,
                        epoch=kappa, bin=l, root_centroid=float(centroid))
    return (kappa, l), tree, [str(w.message) for w in caught]


def build_library(series: Sequence[float], P: int, T: int, c: int, N: int = 2000,
                  structure: Sequence[int] | None = None, step_schedule: StepSchedule | None = None,
                  epochs: Sequence[int] | None = None, seed: int = 0,
                  workers: int = 1) -> TreeLibrary:
    """Fit ``c`` trees for every epoch; epoch ``k`` starts at phase ``k*T mod P``.

    By default one full cycle of phases is covered, ``P / gcd(P, T)`` epochs.

    Each bin's tree is fitted only from the trajectories in its Voronoi cell,
    with its own seed derived from ``(seed, epoch, bin)``.
    """
    step_schedule = step_schedule or StepSchedule()
    structure = [2] * (T - 1) if structure is None else list(structure)
    epochs = list(range(P // math.gcd(P, T))) if epochs is None else list(epochs)
    jobs = []
    centroids: dict[tuple[int, int], float] = {}
    for kappa in epochs:
        sl = cyclostationary_slices(series, P, T, (kappa * T) % P)
        cents, assignment = lloyd_max_roots(sl.trajectories[:, 0], c)
        for l in range(c):
            members = sl.trajectories[assignment == l]
            centroids[(kappa, l)] = float(cents[l])
            ss = np.random.SeedSequence([seed, kappa, l])
            jobs.append((kappa, l, members, structure, float(cents[l]), N, step_schedule, ss))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_entry, jobs))
    else:
        results = [_fit_entry(j) for j in jobs]

    entries = {}
    for key, tree, messages in results:
        for msg in messages:
            log.warning("tree %s: %s", key, msg)
        entries[key] = tree
    params = {"c": c, "T": T, "P": P, "N": N, "structure": structure, "seed": seed,
              "step": {"a0": step_schedule.a0, "n0": step_schedule.n0}}
    return TreeLibrary(dict(sorted(entries.items())), dict(sorted(centroids.items())), params)


# -- run-time updates -----------------------------------------------------------

def library_epoch(library: TreeLibrary, kappa: int) -> int:
    """Library epoch serving chain epoch ``kappa``: itself, or one with the same phase."""
    if kappa in library.epochs:
        return kappa
    P, T = library.params.get("P"), library.params.get("T")
    if P and T:
        phase = (kappa * T) % P
        for k in library.epochs:
            if (k * T) % P == phase:
                return k
    raise KeyError(f"library has no trees for epoch {kappa}")


def select_bin(library: TreeLibrary, kappa: int, present: float) -> int:
    bins = library.bins(kappa)
    if not bins:
        raise KeyError(f"library has no trees for epoch {kappa}")
    cents = np.array([library.centroids[(kappa, l)] for l in bins])
    return bins[int(np.argmin(np.abs(cents - present)))]


def select_and_augment(library: TreeLibrary, kappa: int, present: float) -> ScenarioTree:
    """Tree of the bin nearest to ``present``, with its root replaced by ``present``."""
    l = select_bin(library, kappa, present)
    return library.entries[(kappa, l)].with_root(float(present), epoch=kappa, bin=l,
                                                 present=float(present))


def wait_and_see_update(library: TreeLibrary, kappa: int, l: int, realized: Sequence[float],
                        step_schedule: StepSchedule | None = None,
                        n_start: int | None = None) -> TreeLibrary:
    """Library with entry ``(kappa, l)`` refined by one step on ``realized``.

    The step size continues the schedule at ``n_start + 1`` (default: the
    tree's iteration count + 1); probabilities are recomputed from the
    incremented counters.
    """
    if (kappa, l) not in library.entries:
        raise KeyError(f"library has no entry {(kappa, l)}")
    tree = library.entries[(kappa, l)]
    traj = np.asarray(realized, dtype=float)
    if traj.shape != (tree.horizon,):
        raise ValueError(f"realized trajectory has length {traj.size}, expected {tree.horizon}")
    if step_schedule is None:
        step = library.params.get("step", {})
        step_schedule = StepSchedule(step.get("a0", 1.0), step.get("n0", 30.0))

    leaf_ids, paths = tree.path_matrix()
    if "leaf_counts" in tree.meta:
        counts = np.array(tree.meta["leaf_counts"], dtype=float)
        n_prev = int(tree.meta.get("iterations", counts.sum()))
    else:
        # no counters recorded: treat the path probabilities as one unit of mass
        counts = tree.probabilities()[leaf_ids]
        n_prev = 1
    n = (n_prev if n_start is None else n_start) + 1
    values = np.array(tree.value)
    _sa_step(values, paths, traj, step_schedule(n), counts)

    skeleton = tree.with_values(values)
    total = counts.sum()
    edge = probabilities_from_leaves(skeleton, dict(zip(leaf_ids.tolist(), (counts / total).tolist())))
    meta = {**tree.meta, "leaf_counts": _counts_list(counts), "iterations": int(round(total))}
    updated = skeleton.with_probabilities(edge, **meta)
    entries = dict(library.entries)
    entries[(kappa, l)] = updated
    return TreeLibrary(entries, dict(library.centroids), dict(library.params))


def _counts_list(counts: np.ndarray) -> list:
    if np.all(counts == np.round(counts)):
        return [int(c) for c in counts]
    return counts.tolist()


def compose_residual_tree(residual_tree: ScenarioTree, forecaster: Forecaster,
                          initial_state: Sequence[float]) -> ScenarioTree:
    """Load tree from a tree of forecast residuals.

    The root takes the observed present ``initial_state[0]``; every other node
    gets ``h(state of parent) + residual`` and the state shifts in the new
    value, dropping the oldest.
    """
    beta0 = np.asarray(initial_state, dtype=float)
    if beta0.shape != (forecaster.state_len,):
        raise ValueError(f"initial state has length {beta0.size}, "
                         f"forecaster expects {forecaster.state_len}")
    n = residual_tree.n_nodes
    values = np.empty(n)
    states: list[np.ndarray | None] = [None] * n
    values[0] = beta0[0]
    states[0] = beta0
    for v in np.argsort(residual_tree.stage, kind="stable")[1:]:
        beta = states[residual_tree.parent[v]]
        values[v] = forecaster(beta) + residual_tree.value[v]
        states[v] = np.concatenate(([values[v]], beta[:-1]))
    return residual_tree.with_values(values)


# -- persistence ---------------------------------------------------------------

def tree_filename(kappa: int, l: int) -> str:
    return f"tree_k{kappa:03d}_b{l:02d}.json"


def save_library(library: TreeLibrary, directory: str | Path) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    index = {"params": library.params, "entries": []}
    for (kappa, l), tree in sorted(library.entries.items()):
        name = tree_filename(kappa, l)
        (out / name).write_text(dumps_tree(tree))
        index["entries"].append({"epoch": kappa, "bin": l, "centroid": library.centroids[(kappa, l)],
                                 "file": name})
    (out / "index.json").write_text(json.dumps(index, indent=1, sort_keys=True) + "\n")


def load_library(directory: str | Path) -> TreeLibrary:
    src = Path(directory)
    index = json.loads((src / "index.json").read_text())
    entries, centroids = {}, {}
    for e in index["entries"]:
        key = (int(e["epoch"]), int(e["bin"]))
        entries[key] = load_tree(src / e["file"])
        centroids[key] = float(e["centroid"])
    return TreeLibrary(entries, centroids, index.get("params", {}))
