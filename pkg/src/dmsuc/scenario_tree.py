"""Rooted scenario trees: the finite, discrete approximation of a load filtration.

Nodes carry integer ids assigned breadth-first (root = 0), a stage index, one
scalar value (system load or forecast residual, MW) and the conditional
probability of the edge from the parent. Trees are immutable; every update
elsewhere in the package produces a new tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

PROB_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    """Scenario tree with per-node values and per-edge conditional probabilities.

    Args:
        parent: parent id per node, ``-1`` for the root.
        edge_prob: conditional probability of reaching the node from its parent
            (the root entry is ignored and stored as 1).
        value: nodal value, MW.
        stage: stage index per node; derived from ``parent`` when omitted.
        horizon: number of stages T; defaults to ``max(stage) + 1``.
        meta: free-form metadata (epoch, bin, root centroid, fit counters).
    """

    parent: np.ndarray
    edge_prob: np.ndarray
    value: np.ndarray
    stage: np.ndarray = None
    horizon: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        n = parent.size
        if n == 0:
            raise ValueError("a scenario tree needs at least a root node")
        prob = np.asarray(self.edge_prob, dtype=float)
        value = np.asarray(self.value, dtype=float)
        if prob.shape != (n,) or value.shape != (n,):
            raise ValueError("parent, edge_prob and value must have equal length")
        if parent[0] != -1:
            raise ValueError("node 0 must be the root (parent -1)")
        if np.any((parent[1:] < 0) | (parent[1:] >= n)):
            raise ValueError("non-root nodes need a parent id inside the tree")
        if self.stage is None:
            if np.any(parent[1:] >= np.arange(1, n)):
                raise ValueError("stages can only be derived for breadth-first ids")
            stage = np.zeros(n, dtype=np.int64)
            for v in range(1, n):
                stage[v] = stage[parent[v]] + 1
        else:
            stage = np.asarray(self.stage, dtype=np.int64)
            if stage.shape != (n,):
                raise ValueError("stage must have one entry per node")
        prob = prob.copy()
        prob[0] = 1.0
        horizon = int(stage.max()) + 1 if self.horizon is None else int(self.horizon)

        children: list[list[int]] = [[] for _ in range(n)]
        for v in range(1, n):
            children[parent[v]].append(v)

        object.__setattr__(self, "parent", _frozen(parent))
        object.__setattr__(self, "edge_prob", _frozen(prob))
        object.__setattr__(self, "value", _frozen(value))
        object.__setattr__(self, "stage", _frozen(stage))
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "meta", dict(self.meta))
        object.__setattr__(self, "_children", tuple(tuple(c) for c in children))

    @property
    def n_nodes(self) -> int:
        return int(self.parent.size)

    @property
    def T(self) -> int:
        return self.horizon

    @property
    def root_value(self) -> float:
        return float(self.value[0])

    def children(self, node: int) -> list[int]:
        return list(self._children[_check_node(self, node)])

    def is_leaf(self, node: int) -> bool:
        return not self._children[_check_node(self, node)]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n_nodes) if not self._children[v]]

    def nodes_at(self, stage: int) -> list[int]:
        return [int(v) for v in np.flatnonzero(self.stage == stage)]

    def probabilities(self) -> np.ndarray:
        """Unconditional probability pi_v of every node."""
        pi = np.empty(self.n_nodes)
        pi[0] = 1.0
        # breadth-first ids guarantee parents come first; fall back otherwise
        order = np.argsort(self.stage, kind="stable")
        for v in order[1:]:
            pi[v] = self.edge_prob[v] * pi[self.parent[v]]
        return pi

    def with_values(self, value: Sequence[float], **meta: Any) -> "ScenarioTree":
        """Same graph and probabilities, new nodal values."""
        return ScenarioTree(self.parent, self.edge_prob, value, self.stage, self.horizon,
                            {**self.meta, **meta})

    def with_root(self, root_value: float, **meta: Any) -> "ScenarioTree":
        value = np.array(self.value)
        value[0] = root_value
        return self.with_values(value, **meta)

    def with_probabilities(self, edge_prob: Sequence[float], **meta: Any) -> "ScenarioTree":
        return ScenarioTree(self.parent, edge_prob, self.value, self.stage, self.horizon,
                            {**self.meta, **meta})

    def path_nodes(self, leaf: int) -> list[int]:
        node = _check_node(self, leaf)
        nodes = [node]
        while self.parent[node] >= 0:
            node = int(self.parent[node])
            nodes.append(node)
        return nodes[::-1]

    def path_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Leaf ids and the (n_leaves, T) matrix of node ids along each path.

        Only meaningful for uniform-depth trees.
        """
        leaf_ids = np.array(self.leaves(), dtype=np.int64)
        paths = np.array([self.path_nodes(int(l)) for l in leaf_ids], dtype=np.int64)
        return leaf_ids, paths.reshape(len(leaf_ids), -1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScenarioTree):
            return NotImplemented
        return (self.horizon == other.horizon
                and np.array_equal(self.parent, other.parent)
                and np.array_equal(self.stage, other.stage)
                and np.array_equal(self.edge_prob, other.edge_prob)
                and np.array_equal(self.value, other.value)
                and self.meta == other.meta)

    def __repr__(self) -> str:
        return (f"ScenarioTree(T={self.horizon}, nodes={self.n_nodes}, "
                f"leaves={len(self.leaves())}, root={self.root_value:g})")


@dataclass(frozen=True)
class ScenarioPath:
    node_ids: tuple[int, ...]
    values: tuple[float, ...]
    probability: float


def _check_node(tree: ScenarioTree, node: int) -> int:
    node = int(node)
    if node < 0 or node >= tree.n_nodes:
        raise KeyError(f"unknown node id {node}")
    return node


def path_probability(tree: ScenarioTree, node: int) -> float:
    """Probability of the path from the root to ``node`` (1 at the root)."""
    prob = 1.0
    for v in tree.path_nodes(node)[1:]:
        prob *= float(tree.edge_prob[v])
    return prob


def leaves(tree: ScenarioTree) -> list[int]:
    return tree.leaves()


def parent(tree: ScenarioTree, node: int) -> int:
    return int(tree.parent[_check_node(tree, node)])


def children(tree: ScenarioTree, node: int) -> list[int]:
    return tree.children(node)


def path_to(tree: ScenarioTree, leaf: int) -> ScenarioPath:
    if not tree.is_leaf(leaf):
        raise ValueError(f"node {leaf} is not a leaf")
    nodes = tree.path_nodes(leaf)
    return ScenarioPath(tuple(nodes), tuple(float(tree.value[v]) for v in nodes),
                        path_probability(tree, leaf))


def closest_path(tree: ScenarioTree, trajectory: Sequence[float],
                 skip_root: bool = False) -> tuple[int, float]:
    """Leaf whose root-to-leaf values are l2-closest to ``trajectory``.

    Ties go to the lowest leaf id. With ``skip_root`` the stage-0 coordinate is
    left out of the distance (it is common to every path anyway).
    """
    traj = np.asarray(trajectory, dtype=float)
    if traj.shape != (tree.horizon,):
        raise ValueError(f"trajectory has length {traj.size}, tree horizon is {tree.horizon}")
    leaf_ids, paths = tree.path_matrix()
    vals = tree.value[paths]
    diff = vals - traj
    if skip_root:
        diff = diff[:, 1:]
    dist2 = np.einsum("ij,ij->i", diff, diff)
    k = int(np.argmin(dist2))  # first minimum, leaves are sorted by id
    return int(leaf_ids[k]), float(np.sqrt(dist2[k]))


def validate(tree: ScenarioTree, tol: float = PROB_TOL) -> list[str]:
    """Every violated structural invariant, as human-readable messages."""
    problems = []
    n = tree.n_nodes
    roots = np.flatnonzero(tree.parent < 0)
    if roots.tolist() != [0]:
        problems.append(f"expected a single root at node 0, found roots {roots.tolist()}")
    if tree.stage[0] != 0:
        problems.append("root must be at stage 0")

    # connectivity / acyclicity: walk up from every node
    for v in range(n):
        seen = set()
        u = v
        while u >= 0 and u not in seen:
            seen.add(u)
            u = int(tree.parent[u]) if 0 <= u < n else -1
        if u >= 0:
            problems.append(f"node {v} lies on a cycle")
            break
    for v in range(1, n):
        p = int(tree.parent[v])
        if 0 <= p < n and tree.stage[v] != tree.stage[p] + 1:
            problems.append(f"node {v} at stage {tree.stage[v]} has parent {p} "
                            f"at stage {tree.stage[p]}")

    bad = np.flatnonzero((tree.edge_prob < 0) | (tree.edge_prob > 1) | ~np.isfinite(tree.edge_prob))
    for v in bad:
        problems.append(f"edge probability of node {v} is {tree.edge_prob[v]!r}, outside [0, 1]")
    for u in range(n):
        kids = tree._children[u]
        if kids:
            total = float(sum(tree.edge_prob[v] for v in kids))
            if abs(total - 1.0) > tol:
                problems.append(f"children of node {u} have probabilities summing to {total:.12g}")
        elif tree.stage[u] != tree.horizon - 1:
            problems.append(f"leaf {u} sits at stage {tree.stage[u]}, expected {tree.horizon - 1}")

    order = np.lexsort((np.arange(n), tree.stage))
    if not np.array_equal(order, np.arange(n)):
        problems.append("node ids are not in breadth-first (stage) order")
    if not np.all(np.isfinite(tree.value)):
        problems.append("node values must be finite")
    return problems


# -- construction helpers ---------------------------------------------------

def uniform_tree(branching: Sequence[int], value: Sequence[float] | float = 0.0,
                 edge_prob: Sequence[float] | None = None, **meta: Any) -> ScenarioTree:
    """Tree where every stage-t node has ``branching[t]`` children.

    ``len(branching) == T - 1``; node ids are breadth-first. Edge probabilities
    default to uniform over siblings.
    """
    parents = [-1]
    probs = [1.0]
    frontier = [0]
    for b in branching:
        if b < 1:
            raise ValueError("branching factors must be positive")
        nxt = []
        for u in frontier:
            for _ in range(b):
                parents.append(u)
                probs.append(1.0 / b)
                nxt.append(len(parents) - 1)
        frontier = nxt
    n = len(parents)
    if edge_prob is not None:
        probs = list(edge_prob)
    vals = np.broadcast_to(np.asarray(value, dtype=float), (n,))
    return ScenarioTree(np.array(parents), np.array(probs), vals, meta=meta)


def binary_tree(T: int, value: Sequence[float] | float = 0.0, **meta: Any) -> ScenarioTree:
    return uniform_tree([2] * (T - 1), value, **meta)


def single_path_tree(values: Sequence[float], **meta: Any) -> ScenarioTree:
    values = list(values)
    return uniform_tree([1] * (len(values) - 1), values, **meta)


def tree_from_paths(paths: Sequence[Sequence[float]], probabilities: Sequence[float],
                    **meta: Any) -> ScenarioTree:
    """Fan tree: a shared root then one disjoint branch per scenario.

    All paths must share the same root value.
    """
    paths = np.asarray(paths, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    k, T = paths.shape
    if not np.allclose(paths[:, 0], paths[0, 0]):
        raise ValueError("all scenarios must start at the same root value")
    parents, eprob, vals, stage = [-1], [1.0], [paths[0, 0]], [0]
    # breadth-first: stage 1 nodes of every scenario, then stage 2, ...
    prev = [0] * k
    for t in range(1, T):
        cur = []
        for s in range(k):
            parents.append(prev[s])
            eprob.append(probs[s] if t == 1 else 1.0)
            vals.append(paths[s, t])
            stage.append(t)
            cur.append(len(parents) - 1)
        prev = cur
    return ScenarioTree(np.array(parents), np.array(eprob), np.array(vals),
                        np.array(stage), T, meta)


def probabilities_from_leaves(tree: ScenarioTree, leaf_prob: dict[int, float] | np.ndarray
                              ) -> np.ndarray:
    """Edge conditional probabilities that reproduce the given leaf probabilities.

    Children of a zero-probability node split evenly so the tree stays
    normalised.
    """
    n = tree.n_nodes
    mass = np.zeros(n)
    if isinstance(leaf_prob, dict):
        for leaf, p in leaf_prob.items():
            mass[leaf] = p
    else:
        mass[np.array(tree.leaves())] = leaf_prob
    for v in sorted(range(1, n), key=lambda v: -tree.stage[v]):
        mass[tree.parent[v]] += mass[v]
    edge = np.ones(n)
    for u in range(n):
        kids = tree._children[u]
        if not kids:
            continue
        if mass[u] > 0:
            for v in kids:
                edge[v] = mass[v] / mass[u]
        else:
            for v in kids:
                edge[v] = 1.0 / len(kids)
    return edge


# -- serialization ------------------------------------------------------------

def tree_to_dict(tree: ScenarioTree) -> dict:
    return {
        "T": tree.horizon,
        "nodes": [
            {"id": v, "stage": int(tree.stage[v]), "parent": int(tree.parent[v]),
             "edge_prob": float(tree.edge_prob[v]), "value": float(tree.value[v])}
            for v in range(tree.n_nodes)
        ],
        "meta": _jsonable(tree.meta),
    }


def tree_from_dict(doc: dict) -> ScenarioTree:
    nodes = sorted(doc["nodes"], key=lambda nd: nd["id"])
    if [nd["id"] for nd in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be dense integers starting at 0")
    parent = [-1 if nd.get("parent") is None else int(nd["parent"]) for nd in nodes]
    return ScenarioTree(
        np.array(parent), np.array([float(nd.get("edge_prob", 1.0)) for nd in nodes]),
        np.array([float(nd["value"]) for nd in nodes]),
        np.array([int(nd["stage"]) for nd in nodes]), doc.get("T"), doc.get("meta") or {})


def dumps_tree(tree: ScenarioTree) -> str:
    return json.dumps(tree_to_dict(tree), indent=1, sort_keys=True) + "\n"


def save_tree(tree: ScenarioTree, path: str | Path) -> None:
    Path(path).write_text(dumps_tree(tree))


def load_tree(path: str | Path) -> ScenarioTree:
    return tree_from_dict(json.loads(Path(path).read_text()))


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
