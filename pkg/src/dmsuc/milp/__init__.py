"""Linear and mixed-integer programming: internal solver, MPS export, HiGHS bridge."""

from .branch_and_bound import MILPOptions, relative_gap, solve_milp
from .lp import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult, dual_bound
from .simplex import RevisedSimplex, SimplexOptions, solve_lp

__all__ = [
    "INFEASIBLE", "LIMIT", "OPTIMAL", "UNBOUNDED",
    "LinearProgram", "MILPOptions", "RevisedSimplex", "SimplexOptions", "SolveResult",
    "dual_bound", "relative_gap", "solve_lp", "solve_milp",
]
