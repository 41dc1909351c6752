"""Power-system data: generators, DC network, load distribution, commitment state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    c1: float = 0.0
    c0: float = 0.0
    startup_cost: float = 0.0
    shutdown_cost: float = 0.0
    min_up: int = 1
    min_down: int = 1

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max:
            raise ValueError(f"generator {self.id}: need 0 <= p_min <= p_max")
        if self.ramp_up < 0 or self.ramp_down < 0:
            raise ValueError(f"generator {self.id}: ramp limits must be non-negative")
        if self.min_up < 1 or self.min_down < 1:
            raise ValueError(f"generator {self.id}: minimum up/down times must be >= 1")
        if min(self.c1, self.c0, self.startup_cost, self.shutdown_cost) < 0:
            raise ValueError(f"generator {self.id}: costs must be non-negative")

    @property
    def has_state(self) -> bool:
        """Whether the unit needs residual up/down time variables."""
        return self.min_up > 1 or self.min_down > 1


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: int
    to_bus: int
    limit: float
    reactance: float | None = None

    def __post_init__(self):
        if not self.limit > 0:
            raise ValueError(f"line {self.id}: limit must be positive")


@dataclass(frozen=True, eq=False)
class Network:
    """Buses, lines with flow limits, the PTDF matrix and per-bus load shares.

    ``ptdf[i, j]`` is the flow on ``lines[i]`` per MW injected at ``buses[j]``
    (withdrawn at the slack bus).
    """

    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    ptdf: np.ndarray
    load_share: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(int(b) for b in self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        ptdf = np.asarray(self.ptdf, dtype=float).reshape(len(self.lines), len(self.buses))
        share = np.asarray(self.load_share, dtype=float)
        if share.shape != (len(self.buses),):
            raise ValueError("load_share needs one entry per bus")
        if np.any(share < 0) or abs(share.sum() - 1.0) > 1e-9:
            raise ValueError(f"load shares must be non-negative and sum to 1 (sum={share.sum():.12g})")
        ptdf.flags.writeable = False
        share.flags.writeable = False
        object.__setattr__(self, "ptdf", ptdf)
        object.__setattr__(self, "load_share", share)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (self.buses == other.buses and self.lines == other.lines
                and np.array_equal(self.ptdf, other.ptdf)
                and np.array_equal(self.load_share, other.load_share))

    def bus_index(self, bus: int) -> int:
        return self.buses.index(int(bus))


def compute_ptdf(buses: Sequence[int], lines: Sequence[Line], slack_bus: int | None = None
                 ) -> np.ndarray:
    """DC power transfer distribution factors from line reactances.

    Injections are balanced at ``slack_bus`` (default: first bus), so its
    column is zero.
    """
    buses = [int(b) for b in buses]
    idx = {b: i for i, b in enumerate(buses)}
    n_b, n_l = len(buses), len(lines)
    slack = idx[buses[0] if slack_bus is None else int(slack_bus)]
    incidence = np.zeros((n_l, n_b))
    susceptance = np.zeros(n_l)
    for k, ln in enumerate(lines):
        if not ln.reactance:
            raise ValueError(f"line {ln.id} needs a non-zero reactance to compute PTDFs")
        incidence[k, idx[ln.from_bus]] = 1.0
        incidence[k, idx[ln.to_bus]] = -1.0
        susceptance[k] = 1.0 / ln.reactance
    bbus = incidence.T @ (susceptance[:, None] * incidence)
    keep = [i for i in range(n_b) if i != slack]
    theta = np.zeros((n_b, n_b))
    theta[np.ix_(keep, keep)] = np.linalg.inv(bbus[np.ix_(keep, keep)])
    return (susceptance[:, None] * incidence) @ theta


@dataclass(frozen=True)
class PowerSystem:
    generators: tuple[Generator, ...]
    network: Network
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        ids = [g.id for g in self.generators]
        if len(set(ids)) != len(ids):
            raise ValueError("generator ids must be unique")
        for g in self.generators:
            if g.bus not in self.network.buses:
                raise ValueError(f"generator {g.id} sits at unknown bus {g.bus}")

    @property
    def n_gens(self) -> int:
        return len(self.generators)

    def gen_bus_index(self) -> np.ndarray:
        return np.array([self.network.bus_index(g.bus) for g in self.generators], dtype=np.int64)

    def field(self, name: str) -> np.ndarray:
        return np.array([getattr(g, name) for g in self.generators], dtype=float)


@dataclass(frozen=True)
class CommitState:
    """Per-generator (on/off, residual up stages, residual down stages) at ``0-``."""

    y: tuple[int, ...]
    o: tuple[int, ...]
    d: tuple[int, ...]

    def __post_init__(self):
        y = tuple(int(v) for v in self.y)
        o = tuple(int(v) for v in self.o)
        d = tuple(int(v) for v in self.d)
        if not len(y) == len(o) == len(d):
            raise ValueError("y, o and d need one entry per generator")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "o", o)
        object.__setattr__(self, "d", d)

    @classmethod
    def all_off(cls, n_gens: int) -> "CommitState":
        return cls((0,) * n_gens, (0,) * n_gens, (0,) * n_gens)

    def __len__(self) -> int:
        return len(self.y)

    def violations(self, system: PowerSystem) -> list[str]:
        if len(self) != system.n_gens:
            return [f"state has {len(self)} entries, system has {system.n_gens} generators"]
        problems = []
        for g, y, o, d in zip(system.generators, self.y, self.o, self.d):
            if y not in (0, 1):
                problems.append(f"{g.id}: y={y} is not binary")
            if o < 0 or d < 0:
                problems.append(f"{g.id}: residual times must be non-negative")
            if o > 0 and y != 1:
                problems.append(f"{g.id}: residual up time {o} while off")
            if d > 0 and y != 0:
                problems.append(f"{g.id}: residual down time {d} while on")
            if o > g.min_up - 1:
                problems.append(f"{g.id}: residual up time {o} exceeds min_up-1={g.min_up - 1}")
            if d > g.min_down - 1:
                problems.append(f"{g.id}: residual down time {d} exceeds min_down-1={g.min_down - 1}")
        return problems

    def check(self, system: PowerSystem) -> None:
        problems = self.violations(system)
        if problems:
            raise ValueError("invalid commitment state: " + "; ".join(problems))
