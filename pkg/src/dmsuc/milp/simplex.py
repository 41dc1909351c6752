"""Bounded-variable revised primal simplex.

Rows are handled through logical variables: ``A x - r = 0`` with the row
activity ``r`` boxed by the row bounds, so the all-logical basis ``-I`` is
always available as a start. Phase 1 minimises the sum of bound
infeasibilities of the basic variables directly (no artificial columns), which
also lets branch-and-bound restart from a parent's basis after a bound change.

The basis is kept as an LU factorization (SuperLU) plus a product-form eta
file, refactorized every ``refactor_every`` pivots. Pricing is Dantzig's rule
with a switch to Bland's rule after a run of degenerate pivots; the ratio test
is Harris' two-pass test. All tie-breaking is by lowest index.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import qr
from scipy.sparse.linalg import splu

from .lp import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult

BASIC, AT_LO, AT_HI, FREE = 0, 1, 2, 3


@dataclass
class SimplexOptions:
    primal_tol: float = 1e-9
    dual_tol: float = 1e-9
    pivot_tol: float = 1e-9
    max_iter: int | None = None
    time_limit: float | None = None
    refactor_every: int = 64
    degenerate_limit: int = 30


class _Factor:
    """LU of the basis matrix with product-form updates."""

    def __init__(self, B: sp.csc_matrix):
        self.m = B.shape[0]
        self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        w = self.lu.solve(a)
        for r, d in self.etas:
            wr = w[r] / d[r]
            w -= d * wr
            w[r] = wr
        return w

    def btran(self, c: np.ndarray) -> np.ndarray:
        z = np.array(c, dtype=float)
        for r, d in reversed(self.etas):
            z[r] = (z[r] - (z @ d - z[r] * d[r])) / d[r]
        return self.lu.solve(z, trans="T")

    def update(self, r: int, d: np.ndarray) -> None:
        self.etas.append((r, d))


class RevisedSimplex:
    """Reusable LP engine for one constraint matrix; bounds may change per solve."""

    def __init__(self, lp: LinearProgram, options: SimplexOptions | None = None):
        self.lp = lp
        self.opt = options or SimplexOptions()
        n, m = lp.n_vars, lp.n_rows
        self.n, self.m = n, m
        self.M = sp.hstack([lp.A.tocsc(), -sp.identity(m, format="csc")], format="csc")
        self.MT = self.M.T.tocsr()
        self.cost = np.concatenate([lp.c, np.zeros(m)])
        self.row_lo, self.row_hi = lp.row_bounds()
        self.cost_scale = max(1.0, float(np.max(np.abs(lp.c), initial=0.0)))

    def column(self, j: int) -> np.ndarray:
        a = np.zeros(self.m)
        s, e = self.M.indptr[j], self.M.indptr[j + 1]
        a[self.M.indices[s:e]] = self.M.data[s:e]
        return a

    def solve(self, lower: np.ndarray | None = None, upper: np.ndarray | None = None,
              basis: tuple | None = None) -> SolveResult:
        lp, opt = self.lp, self.opt
        n, m = self.n, self.m
        start = time.perf_counter()
        lo = np.concatenate([lp.lower if lower is None else lower, self.row_lo])
        hi = np.concatenate([lp.upper if upper is None else upper, self.row_hi])
        if np.any(lo > hi + opt.primal_tol):
            return SolveResult(INFEASIBLE, stats={"simplex_iterations": 0},
                               message="crossing bounds")
        max_iter = opt.max_iter or 50 * (n + m) + 1000

        if m == 0:
            return self._solve_unconstrained(lo, hi, start)
        head, status = self._initial_basis(lo, hi, basis)
        z = np.zeros(n + m)
        self._place_nonbasic(z, status, lo, hi)
        fac = self._refactor(head, status, z, lo, hi)

        iters = 0
        degenerate = 0
        bland = False
        y = np.zeros(m)
        d = np.zeros(n + m)
        while True:
            if iters >= max_iter or (opt.time_limit is not None
                                     and time.perf_counter() - start > opt.time_limit):
                return self._result(LIMIT, z, y, d, head, status, iters, start,
                                    "iteration or time limit")
            zb = z[head]
            tol_lo = opt.primal_tol * np.maximum(1.0, np.abs(lo[head]))
            tol_hi = opt.primal_tol * np.maximum(1.0, np.abs(hi[head]))
            below = zb < lo[head] - tol_lo
            above = zb > hi[head] + tol_hi
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = above.astype(float) - below.astype(float)
                y = fac.btran(cb)
                d = -(self.MT @ y)
                dtol = opt.dual_tol
            else:
                y = fac.btran(self.cost[head])
                d = self.cost - self.MT @ y
                dtol = opt.dual_tol * self.cost_scale
            d[head] = 0.0

            movable = hi > lo
            cand = ((status == AT_LO) & (d < -dtol) & movable) \
                | ((status == AT_HI) & (d > dtol) & movable) \
                | ((status == FREE) & (np.abs(d) > dtol))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                if fac.etas:
                    # confirm on a fresh factorization before declaring a verdict
                    fac = self._refactor(head, status, z, lo, hi)
                    continue
                if phase1:
                    return self._result(INFEASIBLE, z, y, d, head, status, iters, start)
                return self._result(OPTIMAL, z, y, d, head, status, iters, start)

            q = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if (status[q] == AT_LO or (status[q] == FREE and d[q] < 0)) else -1.0
            alpha = fac.ftran(self.column(q))
            rate = direction * alpha

            r, theta, target = self._ratio_test(zb, lo[head], hi[head], rate, tol_lo, tol_hi,
                                                head, bland)
            flip = hi[q] - lo[q]
            if np.isfinite(flip) and (r < 0 or flip <= theta):
                z[q] += direction * flip
                z[head] -= flip * rate
                status[q] = AT_HI if status[q] == AT_LO else AT_LO
                z[q] = hi[q] if status[q] == AT_HI else lo[q]
                iters += 1
                degenerate = 0
                bland = False
                continue
            if r < 0:
                if phase1:
                    return self._result(LIMIT, z, y, d, head, status, iters, start,
                                        "phase 1 without a blocking variable")
                return self._result(UNBOUNDED, z, y, d, head, status, iters, start)

            theta = max(theta, 0.0)
            z[q] += direction * theta
            z[head] -= theta * rate
            leaving = head[r]
            z[leaving] = target
            status[leaving] = AT_LO if target == lo[leaving] else AT_HI
            if lo[leaving] == hi[leaving]:
                status[leaving] = AT_LO
            head[r] = q
            status[q] = BASIC
            iters += 1

            if theta <= 1e-12:
                degenerate += 1
                if degenerate > opt.degenerate_limit:
                    bland = True
            else:
                degenerate = 0
                bland = False

            if len(fac.etas) + 1 >= opt.refactor_every or abs(alpha[r]) < 1e-7:
                fac = self._refactor(head, status, z, lo, hi)
            else:
                fac.update(r, alpha)

    # -- pieces -----------------------------------------------------------------

    def _solve_unconstrained(self, lo, hi, start):
        c = self.lp.c
        x = np.where(c > 0, lo, np.where(c < 0, hi, np.where(np.isfinite(lo), lo,
                                                             np.where(np.isfinite(hi), hi, 0.0))))
        stats = {"simplex_iterations": 0, "wall_time": time.perf_counter() - start}
        if not np.all(np.isfinite(x)):
            return SolveResult(UNBOUNDED, stats=stats)
        obj = self.lp.objective(x)
        status = np.where(x == lo, AT_LO, AT_HI).astype(np.int8)
        return SolveResult(OPTIMAL, x, obj, 0.0, obj, stats, duals=np.zeros(0),
                           reduced_costs=c.copy(), basis=(np.zeros(0, dtype=np.int64), status))

    def _initial_basis(self, lo, hi, basis):
        n, m = self.n, self.m
        if basis is not None:
            head = np.array(basis[0], dtype=np.int64)
            status = np.array(basis[1], dtype=np.int8)
            nb = status != BASIC
            # nonbasic variables whose bound vanished move to a finite one
            fix_lo = nb & (status == AT_LO) & ~np.isfinite(lo)
            status[fix_lo & np.isfinite(hi)] = AT_HI
            fix_hi = nb & (status == AT_HI) & ~np.isfinite(hi)
            status[fix_hi & np.isfinite(lo)] = AT_LO
            status[nb & ~np.isfinite(lo) & ~np.isfinite(hi)] = FREE
            status[nb & (status == FREE) & np.isfinite(lo)] = AT_LO
            return head, status
        head = np.arange(n, n + m, dtype=np.int64)
        status = np.where(np.isfinite(lo), AT_LO, np.where(np.isfinite(hi), AT_HI, FREE)).astype(np.int8)
        status[head] = BASIC
        return head, status

    @staticmethod
    def _place_nonbasic(z, status, lo, hi):
        z[status == AT_LO] = lo[status == AT_LO]
        z[status == AT_HI] = hi[status == AT_HI]
        z[status == FREE] = 0.0

    def _refactor(self, head, status, z, lo, hi):
        """Factor the basis, repairing it first if it is singular; recomputes ``z[head]``."""
        try:
            fac = _Factor(self.M[:, head].tocsc())
        except RuntimeError:
            self._repair(head, status, z, lo, hi)
            fac = _Factor(self.M[:, head].tocsc())
        nb = np.ones(self.n + self.m, dtype=bool)
        nb[head] = False
        zn = np.where(nb, z, 0.0)
        z[head] = fac.ftran(-(self.M @ zn))
        return fac

    def _repair(self, head, status, z, lo, hi):
        """Swap dependent basic columns for logicals so the basis is nonsingular.

        A pivoted QR of the basis keeps a maximal independent set of its
        columns; a second one on their rows picks the rows those columns
        cover, and the logicals of the other rows fill the basis. Displaced
        structurals move to their nearest finite bound.
        """
        n, m = self.n, self.m
        B = self.M[:, head].toarray()
        _, R, piv = qr(B, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-9 * max(1.0, diag[0] if diag.size else 1.0)))
        keep = np.sort(piv[:rank])
        _, _, rows = qr(B[:, keep].T, mode="economic", pivoting=True)
        free_rows = np.setdiff1d(np.arange(m), rows[:rank])
        for j in np.setdiff1d(np.arange(m), keep):
            v = head[j]
            if np.isfinite(lo[v]) and (not np.isfinite(hi[v]) or
                                       abs(z[v] - lo[v]) <= abs(z[v] - hi[v])):
                status[v] = AT_LO
            elif np.isfinite(hi[v]):
                status[v] = AT_HI
            else:
                status[v] = FREE
        # a kept logical always covers its own row, so no column enters twice
        head[:] = np.concatenate([head[keep], n + free_rows])
        status[head] = BASIC
        self._place_nonbasic(z, status, lo, hi)

    def _ratio_test(self, zb, lob, hib, rate, tol_lo, tol_hi, head, bland):
        """Harris two-pass ratio test; returns (row, step, bound the row hits)."""
        piv = self.opt.pivot_tol
        dec = rate > piv
        inc = rate < -piv
        above = zb > hib + tol_hi
        below = zb < lob - tol_lo
        # decreasing: infeasible-above rows stop at hi, feasible rows at lo
        tgt = np.full(zb.size, np.nan)
        tgt = np.where(dec & above, hib, tgt)
        tgt = np.where(dec & ~above & ~below, lob, tgt)
        tgt = np.where(inc & below, lob, tgt)
        tgt = np.where(inc & ~above & ~below, hib, tgt)
        active = np.isfinite(tgt)
        if not active.any():
            return -1, np.inf, np.nan
        rows = np.flatnonzero(active)
        mag = np.abs(rate[rows])
        dist = np.abs(zb[rows] - tgt[rows])
        tol = np.where(rate[rows] > 0, np.where(above[rows], tol_hi[rows], tol_lo[rows]),
                       np.where(below[rows], tol_lo[rows], tol_hi[rows]))
        exact = dist / mag
        if bland:
            tmin = exact.min()
            ties = rows[exact <= tmin + 1e-12]
            r = int(ties[np.argmin(head[ties])])
            return r, float(exact[rows == r][0]), float(tgt[r])
        relaxed = (dist + tol) / mag
        tmax = relaxed.min()
        ok = exact <= tmax
        k = int(np.flatnonzero(ok)[np.argmax(mag[ok])])
        r = int(rows[k])
        return r, float(exact[k]), float(tgt[r])

    def _result(self, status_code, z, y, d, head, status, iters, start, message=""):
        n = self.n
        stats = {"simplex_iterations": iters, "wall_time": time.perf_counter() - start}
        x = z[:n].copy()
        if status_code == OPTIMAL:
            y = y.copy()
            basic_rows = head[head >= n] - n
            y[basic_rows] = 0.0
            return SolveResult(OPTIMAL, x, self.lp.objective(x), 0.0, self.lp.objective(x), stats,
                               duals=y, reduced_costs=d[:n].copy(),
                               basis=(head.copy(), status.copy()), message=message)
        return SolveResult(status_code, x if status_code == LIMIT else None, stats=stats,
                           basis=(head.copy(), status.copy()), message=message)


def solve_lp(lp: LinearProgram, options: SimplexOptions | None = None) -> SolveResult:
    """Solve the continuous relaxation of ``lp`` (integrality marks are ignored)."""
    return RevisedSimplex(lp, options).solve()
