"""Dense two-phase tableau simplex.

Pivoting uses Dantzig's most-negative reduced cost for a bounded number of
iterations and then switches to Bland's rule, which cannot cycle. The ratio
test breaks ties by the smallest basic index so the whole run is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .config import DEFAULT_TOL, Tolerances


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    BREAKDOWN = "breakdown"


_REL = {"<=": "<=", "le": "<=", "≤": "<=", "=": "=", "==": "=", "eq": "=", ">=": ">=", "ge": ">=", "≥": ">="}


@dataclass
class LinearProgram:
    """max (or min) c @ x  s.t.  A[i] @ x  rel[i]  b[i],  lo <= x <= hi.

    ``bounds`` defaults to ``x >= 0``. Use ``-np.inf`` / ``np.inf`` for open
    sides.
    """

    c: np.ndarray
    A: np.ndarray
    rel: Sequence[str]
    b: np.ndarray
    bounds: Optional[Sequence[tuple]] = None
    maximize: bool = True

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        m = self.A.shape[0]
        if isinstance(self.rel, str):
            self.rel = [self.rel] * m
        try:
            self.rel = [_REL[r] for r in self.rel]
        except KeyError as exc:
            raise ValueError(f"unknown relation {exc.args[0]!r}") from None
        if len(self.rel) != m or self.b.size != m:
            raise ValueError(f"constraint rows disagree: A has {m}, rel {len(self.rel)}, b {self.b.size}")
        if self.bounds is None:
            self.bounds = [(0.0, np.inf)] * n
        if len(self.bounds) != n:
            raise ValueError(f"bounds has {len(self.bounds)} entries for {n} variables")
        for arr, name in ((self.c, "objective"), (self.A, "constraint matrix"), (self.b, "right-hand side")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entry in {name}")


@dataclass
class LPResult:
    status: LPStatus
    value: float = float("nan")
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None  # one per constraint row of the input
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def _standardize(lp: LinearProgram):
    """Rewrite bounds as x = shift + z[cols] * sign summed per variable, z >= 0, plus extra <= rows."""
    n = lp.c.size
    src, sign, shift, extra = [], [], np.zeros(n), []
    for j, (lo, hi) in enumerate(lp.bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            return None
        if np.isfinite(lo):
            shift[j] = lo
            src.append(j)
            sign.append(1.0)
            if np.isfinite(hi):
                extra.append((len(src) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            src.append(j)
            sign.append(-1.0)
        else:
            src += [j, j]
            sign += [1.0, -1.0]
    src = np.array(src, dtype=np.int64)
    sign = np.array(sign)
    A = lp.A[:, src] * sign
    b = lp.b - lp.A @ shift
    rel = list(lp.rel)
    if extra:
        E = np.zeros((len(extra), src.size))
        for r, (k, _) in enumerate(extra):
            E[r, k] = 1.0
        A = np.vstack([A, E])
        b = np.concatenate([b, [ub for _, ub in extra]])
        rel += ["<="] * len(extra)
    c = lp.c[src] * sign
    if not lp.maximize:
        c = -c
    return A, b, rel, c, (src, sign), shift


class _Tableau:
    def __init__(self, A, b, rel, tol: Tolerances):
        m, n = A.shape
        self.tol = tol
        rel_arr = np.array(rel)
        # b < 0 rows are negated; ">= 0" rows become "<= 0" so they start with a slack basis
        flip = (b < 0) | ((b == 0) & (rel_arr == ">="))
        A = np.where(flip[:, None], -A, A)
        b = np.abs(b)
        rel = [{"<=": ">=", ">=": "<=", "=": "="}[r] if f else r for r, f in zip(rel, flip)]
        n_slack = sum(r != "=" for r in rel)
        n_art = sum(r != "<=" for r in rel)
        width = n + n_slack + n_art + 1
        T = np.zeros((m + 1, width))
        T[:m, :n] = A
        T[:m, -1] = b
        basis = np.empty(m, dtype=np.int64)
        unit = np.empty(m, dtype=np.int64)  # column holding the initial identity for row i
        s, a = n, n + n_slack
        for i, r in enumerate(rel):
            if r == "<=":
                T[i, s] = 1.0
                basis[i] = unit[i] = s
                s += 1
            else:
                if r == ">=":
                    T[i, s] = -1.0
                    s += 1
                T[i, a] = 1.0
                basis[i] = unit[i] = a
                a += 1
        self.T, self.basis, self.unit, self.flip = T, basis, unit, flip
        self.m, self.n, self.n_art = m, n, n_art
        self.art_start = n + n_slack
        self.iterations = 0

    def set_objective(self, cost):
        m = self.m
        self.T[m, :-1] = -cost
        self.T[m, -1] = 0.0
        for i in range(m):
            cb = cost[self.basis[i]]
            if cb != 0.0:
                self.T[m] += cb * self.T[i]

    def run(self, allowed, max_iter, dantzig_iter):
        T, m, tol = self.T, self.m, self.tol
        it = 0
        while True:
            d = T[m, :-1]
            cand = np.nonzero(allowed & (d < -tol.lp_cost))[0]
            if cand.size == 0:
                return LPStatus.OPTIMAL
            if it >= max_iter:
                return LPStatus.BREAKDOWN
            j = cand[np.argmin(d[cand])] if it < dantzig_iter else cand[0]
            col = T[:m, j]
            rows = np.nonzero(col > tol.lp_pivot)[0]
            if rows.size == 0:
                return LPStatus.UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            rmin = ratios.min()
            tie = rows[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
            r = tie[np.argmin(self.basis[tie])]
            _kernels.pivot(T, int(r), int(j))
            self.basis[r] = j
            it += 1
            self.iterations += 1

    def drive_out_artificials(self):
        T = self.T
        for i in range(self.m):
            if self.basis[i] < self.art_start:
                continue
            row = T[i, : self.art_start]
            nz = np.nonzero(np.abs(row) > self.tol.lp_pivot)[0]
            if nz.size:
                j = nz[np.argmax(np.abs(row[nz]))]
                _kernels.pivot(T, i, int(j))
                self.basis[i] = j


def solve_lp(lp: LinearProgram, tol: Tolerances = DEFAULT_TOL, max_iter: Optional[int] = None) -> LPResult:
    """Solve ``lp`` with the two-phase simplex method."""
    std = _standardize(lp)
    if std is None:
        return LPResult(LPStatus.INFEASIBLE, diagnostics={"reason": "empty variable bounds"})
    A, b, rel, c, (src, sign), shift = std
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    dantzig_iter = 10 * (m + n) + 100
    tab = _Tableau(A, b, rel, tol)
    width = tab.T.shape[1] - 1

    if tab.n_art:
        cost1 = np.zeros(width)
        cost1[tab.art_start :] = -1.0
        tab.set_objective(cost1)
        status = tab.run(np.ones(width, dtype=bool), max_iter, dantzig_iter)
        if status is LPStatus.BREAKDOWN:
            return LPResult(status, iterations=tab.iterations, diagnostics={"phase": 1})
        infeas = -tab.T[m, -1]
        if infeas > tol.lp_feas * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult(LPStatus.INFEASIBLE, iterations=tab.iterations, diagnostics={"phase1_residual": float(infeas)})
        tab.drive_out_artificials()

    allowed = np.ones(width, dtype=bool)
    allowed[tab.art_start :] = False
    cost2 = np.zeros(width)
    cost2[:n] = c
    tab.set_objective(cost2)
    status = tab.run(allowed, max_iter, dantzig_iter)
    if status is not LPStatus.OPTIMAL:
        return LPResult(status, iterations=tab.iterations, diagnostics={"phase": 2})

    T = tab.T
    z = np.zeros(width)
    z[tab.basis] = T[:m, -1]
    z = np.maximum(z[:n], 0.0)
    x = shift.copy()
    np.add.at(x, src, sign * z)
    # y = c_B B^-1 sits in the objective row under the initial identity columns
    y = T[m, tab.unit].copy()
    y = np.where(tab.flip, -y, y)[: lp.A.shape[0]]
    if not lp.maximize:
        y = -y
    value = float(lp.c @ x)
    Ax = lp.A @ x
    viol = np.zeros(len(lp.rel))
    for i, r in enumerate(lp.rel):
        if r == "<=":
            viol[i] = max(Ax[i] - lp.b[i], 0.0)
        elif r == ">=":
            viol[i] = max(lp.b[i] - Ax[i], 0.0)
        else:
            viol[i] = abs(Ax[i] - lp.b[i])
    resid = float(viol.max(initial=0.0))
    return LPResult(
        LPStatus.OPTIMAL,
        value=value,
        x=x,
        duals=y,
        iterations=tab.iterations,
        diagnostics={"residual": resid, "basis": tab.basis.copy()},
    )

