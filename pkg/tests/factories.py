"""Random instance generators shared by the tests."""

from __future__ import annotations

import numpy as np

from dmsuc.scenario_tree import ScenarioTree, single_path_tree, uniform_tree
from dmsuc.system import CommitState, Generator, Line, Network, PowerSystem, compute_ptdf
from dmsuc.uc_model import UCInstance


def random_tree(rng: np.random.Generator, max_T: int = 6, max_branch: int = 3) -> ScenarioTree:
    """Valid tree with random stage-wise branching and Dirichlet edge probabilities."""
    T = int(rng.integers(1, max_T + 1))
    parents, probs, frontier = [-1], [1.0], [0]
    for _ in range(T - 1):
        nxt = []
        for u in frontier:
            b = int(rng.integers(1, max_branch + 1))
            w = rng.dirichlet(np.ones(b))
            for p in w:
                parents.append(u)
                probs.append(float(p))
                nxt.append(len(parents) - 1)
        frontier = nxt
    n = len(parents)
    return ScenarioTree(np.array(parents), np.array(probs), rng.uniform(50, 150, n))


def two_bus_network(rng: np.random.Generator, limit: float | None = None) -> Network:
    line = Line("l1", 1, 2, float(rng.uniform(10, 80) if limit is None else limit), 0.1)
    return Network((1, 2), (line,), compute_ptdf((1, 2), (line,)), np.array([0.4, 0.6]))


def random_generator(rng: np.random.Generator, name: str, max_updown: int = 3,
                     **fixed) -> Generator:
    pmax = float(rng.uniform(40, 120))
    pmin = float(rng.uniform(0, 0.4) * pmax)
    ramp_lo = max(pmin, 0.4 * pmax)
    kw = dict(id=name, bus=int(rng.integers(1, 3)), p_min=pmin, p_max=pmax,
              ramp_up=float(rng.uniform(ramp_lo, pmax)),
              ramp_down=float(rng.uniform(ramp_lo, pmax)),
              c1=float(rng.uniform(5, 40)), c0=float(rng.uniform(0, 100)),
              startup_cost=float(rng.uniform(0, 300)), shutdown_cost=float(rng.uniform(0, 100)),
              min_up=int(rng.integers(1, max_updown + 1)),
              min_down=int(rng.integers(1, max_updown + 1)))
    kw.update(fixed)
    return Generator(**kw)


def random_state(rng: np.random.Generator, gens) -> tuple[CommitState, list[float]]:
    y = [int(rng.random() < 0.5) for _ in gens]
    o = [int(rng.integers(0, g.min_up)) if on else 0 for g, on in zip(gens, y)]
    d = [int(rng.integers(0, g.min_down)) if not on else 0 for g, on in zip(gens, y)]
    disp = [float(rng.uniform(g.p_min, g.p_max)) if on else 0.0 for g, on in zip(gens, y)]
    return CommitState(y, o, d), disp


def small_uc_instance(rng: np.random.Generator, max_binaries: int = 12) -> UCInstance:
    """Up to 3 units on a single-path or binary tree with T <= 3 and <= 12 binaries."""
    G = int(rng.integers(1, 4))
    T = int(rng.integers(1, 4))
    branching = [1] * (T - 1) if rng.random() < 0.5 or T == 1 else [2] * (T - 1)
    n_nodes = uniform_tree(branching).n_nodes
    G = max(1, min(G, max_binaries // n_nodes))
    if n_nodes * G > max_binaries:
        branching = [1] * (T - 1)
        n_nodes = T
    gens = [random_generator(rng, f"g{g}") for g in range(G)]
    # loads scale with the fleet so that most, not all, instances are feasible
    cap = sum(g.p_max for g in gens)
    tree = uniform_tree(branching, rng.uniform(0.4, 0.85, n_nodes) * cap)
    net = two_bus_network(rng, limit=float(rng.uniform(0.25, 0.7) * cap))
    system = PowerSystem(tuple(gens), net)
    init, disp = random_state(rng, gens)
    return UCInstance(system, tree, init, carried_dispatch=disp)


def feasible_uc_instance(rng: np.random.Generator, tree: ScenarioTree, G: int = 3,
                         max_updown: int = 4) -> UCInstance:
    """Instance that is feasible by construction: enough quick-start capacity, loose line."""
    gens = [random_generator(rng, f"g{g}", max_updown=max_updown) for g in range(G)]
    # an always-available flexible unit keeps every instance feasible
    gens.append(Generator("flex", 2, 0.0, 400.0, 400.0, 400.0, c1=200.0, c0=0.0,
                          startup_cost=0.0, shutdown_cost=0.0, min_up=1, min_down=1))
    system = PowerSystem(tuple(gens), two_bus_network(rng, limit=1e4))
    return UCInstance(system, tree, CommitState.all_off(len(gens)))
