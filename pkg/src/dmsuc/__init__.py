"""Dynamic multi-stage stochastic unit commitment.

Scenario-tree libraries fitted from cyclostationary load history, a nodal
unit-commitment MILP with minimum up/down states, an internal simplex and
branch-and-bound solver, and a rolling-horizon engine that carries the
commitment state from one decision epoch to the next.
"""

from importlib.resources import files

from .scenario_tree import ScenarioTree, closest_path, load_tree, save_tree, validate
from .system import CommitState, Generator, Line, Network, PowerSystem, compute_ptdf

__version__ = "0.1.0"


def data_path(name: str = ""):
    """Path of a shipped example file (or the data directory itself)."""
    return files(__name__).joinpath("data", name) if name else files(__name__).joinpath("data")


__all__ = [
    "CommitState", "Generator", "Line", "Network", "PowerSystem", "ScenarioTree",
    "closest_path", "compute_ptdf", "data_path", "load_tree", "save_tree", "validate",
]
