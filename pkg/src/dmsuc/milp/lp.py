"""Problem and result containers shared by the internal and external solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit-reached"


@dataclass
class LinearProgram:
    """``min c.x + offset`` s.t. sense-wise rows ``A x (<=|=|>=) rhs``, bounds, integrality.

    Optional ``ranges`` follow MPS semantics: a row with a finite range ``R``
    is two-sided, ``[rhs-|R|, rhs]`` for ``L`` rows, ``[rhs, rhs+|R|]`` for
    ``G`` rows, and ``[rhs, rhs+R]`` or ``[rhs+R, rhs]`` for ``E`` rows.
    """

    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    ranges: np.ndarray | None = None
    offset: float = 0.0
    col_names: list[str] | None = None
    row_names: list[str] | None = None
    name: str = "LP"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = sp.csr_matrix(self.A, dtype=float)
        if self.A.shape[1] != n:
            if self.A.shape == (0, 0):
                self.A = sp.csr_matrix((0, n))
            else:
                raise ValueError(f"A has {self.A.shape[1]} columns, c has {n} entries")
        m = self.A.shape[0]
        self.sense = np.asarray(self.sense, dtype="<U1").reshape(m)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(m)
        self.lower = np.asarray(self.lower, dtype=float).reshape(n)
        self.upper = np.asarray(self.upper, dtype=float).reshape(n)
        self.integer = np.asarray(self.integer, dtype=bool).reshape(n)
        self.ranges = (np.full(m, np.nan) if self.ranges is None
                       else np.asarray(self.ranges, dtype=float).reshape(m))
        if not set(self.sense.tolist()) <= {"L", "E", "G"}:
            raise ValueError("row senses must be 'L', 'E' or 'G'")
        if np.any(self.lower > self.upper):
            bad = int(np.flatnonzero(self.lower > self.upper)[0])
            raise ValueError(f"variable {bad} has lower bound above upper bound")
        if np.any(self.integer & ~(np.isfinite(self.lower) & np.isfinite(self.upper))):
            raise ValueError("integer variables need finite bounds")
        for names, size, what in ((self.col_names, n, "column"), (self.row_names, m, "row")):
            if names is not None and len(names) != size:
                raise ValueError(f"{what} names do not match the dimensions")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_integer(self) -> int:
        return int(self.integer.sum())

    @classmethod
    def from_triplets(cls, c: Sequence[float], rows: Sequence[int], cols: Sequence[int],
                      vals: Sequence[float], sense: Sequence[str], rhs: Sequence[float],
                      lower: Sequence[float], upper: Sequence[float],
                      integer: Sequence[bool] | None = None, **kwargs) -> "LinearProgram":
        n, m = len(c), len(sense)
        A = sp.csr_matrix((np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64),
                                                           np.asarray(cols, dtype=np.int64))),
                          shape=(m, n))
        integer = np.zeros(n, dtype=bool) if integer is None else integer
        return cls(c, A, sense, rhs, lower, upper, integer, **kwargs)

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper limits on every row activity ``A x``."""
        lo = np.where(self.sense == "L", -np.inf, self.rhs)
        hi = np.where(self.sense == "G", np.inf, self.rhs)
        r = self.ranges
        has = np.isfinite(r)
        lo = np.where(has & (self.sense == "L"), self.rhs - np.abs(r), lo)
        hi = np.where(has & (self.sense == "G"), self.rhs + np.abs(r), hi)
        eq = has & (self.sense == "E")
        lo = np.where(eq & (r < 0), self.rhs + r, lo)
        hi = np.where(eq & (r > 0), self.rhs + r, hi)
        return lo, hi

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.offset)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of ``x`` (integrality not included)."""
        act = self.A @ x
        lo, hi = self.row_bounds()
        viol = [0.0,
                float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)),
                float(np.max(lo - act, initial=0.0)), float(np.max(act - hi, initial=0.0))]
        return max(viol)

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LinearProgram":
        return LinearProgram(self.c, self.A, self.sense, self.rhs, lower, upper, self.integer,
                             self.ranges, self.offset, self.col_names, self.row_names, self.name)

    def relaxation(self) -> "LinearProgram":
        return LinearProgram(self.c, self.A, self.sense, self.rhs, self.lower, self.upper,
                             np.zeros(self.n_vars, dtype=bool), self.ranges, self.offset,
                             self.col_names, self.row_names, self.name)


def dual_bound(lp: LinearProgram, y: np.ndarray, zero_tol: float = 1e-11) -> float:
    """Lagrangian lower bound on the LP optimum for row multipliers ``y``.

    With reduced costs ``d = c - A^T y`` the bound is
    ``sum_j min(d_j l_j, d_j u_j) + sum_i min(y_i r_i^lo, y_i r_i^hi) + offset``,
    valid for any ``y`` (``-inf`` when some term is unbounded). Coefficients
    below ``zero_tol`` (relative to the cost scale) count as exact zeros.
    """
    y = np.asarray(y, dtype=float)
    scale = max(1.0, float(np.max(np.abs(lp.c), initial=0.0)))
    y = np.where(np.abs(y) <= zero_tol * scale, 0.0, y)
    d = lp.c - lp.A.T @ y
    d = np.where(np.abs(d) <= zero_tol * scale, 0.0, d)
    rlo, rhi = lp.row_bounds()

    def box_min(coef, lo, hi):
        with np.errstate(invalid="ignore"):
            a = np.where(coef == 0, 0.0, coef * lo)
            b = np.where(coef == 0, 0.0, coef * hi)
        return float(np.sum(np.minimum(a, b)))

    return box_min(d, lp.lower, lp.upper) + box_min(y, rlo, rhi) + lp.offset


@dataclass
class SolveResult:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    gap: float = float("nan")
    bound: float = float("nan")
    stats: dict = field(default_factory=dict)
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: tuple | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def has_solution(self) -> bool:
        return self.x is not None
