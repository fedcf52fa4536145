"""Brute-force reference values used to cross-check the LP-based solvers.

None of these share code paths with the simplex: the grid searches
enumerate kernels on a lattice of the experiment polytope, and the LP oracle
enumerates bases directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .ambiguity import Attitude, Linear
from .game import Game


def simplex_grid(n: int, step: float) -> np.ndarray:
    """All points of the (n-1)-simplex whose coordinates are multiples of ``step``."""
    k = int(round(1.0 / step))
    if abs(k * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1")
    pts = [c for c in itertools.product(range(k + 1), repeat=n - 1) if sum(c) <= k]
    out = np.array([list(c) + [k - sum(c)] for c in pts], dtype=float) / k
    return out


def grid_kernels(n_states: int, n_actions: int, step: float) -> np.ndarray:
    rows = simplex_grid(n_actions, step)
    idx = itertools.product(range(len(rows)), repeat=n_states)
    return np.array([rows[list(t)] for t in idx])


@dataclass
class GridResult:
    value: float
    kernel: Optional[np.ndarray]
    evaluated: int


def _per_state(game: Game, rows: np.ndarray):
    """Per-state contributions of each lattice row to u_s, u_r and every obedience slack."""
    p, S, R = game.prior, game.sender_payoff, game.receiver_payoff
    nA = game.n_actions
    pairs = [(a, b) for a in range(nA) for b in range(nA) if a != b]
    us = [p[w] * rows @ S[:, w] for w in range(game.n_states)]
    ur = [p[w] * rows @ R[:, w] for w in range(game.n_states)]
    ob = [np.stack([p[w] * rows[:, a] * (R[a, w] - R[b, w]) for a, b in pairs], axis=1) if pairs else np.zeros((len(rows), 0)) for w in range(game.n_states)]
    return us, ur, ob


def _grid_search(game: Game, step: float, obedient: bool, floor: Optional[float], tol: float) -> GridResult:
    rows = simplex_grid(game.n_actions, step)
    us, ur, ob = _per_state(game, rows)
    nW = game.n_states
    best, arg, count = -np.inf, None, 0
    # enumerate all but the last state, vectorize the last
    for head in itertools.product(range(len(rows)), repeat=nW - 1):
        s = sum(us[w][i] for w, i in enumerate(head)) + us[-1]
        ok = np.ones(len(rows), dtype=bool)
        if obedient:
            o = sum(ob[w][i] for w, i in enumerate(head)) + ob[-1]
            ok &= np.all(o >= -tol, axis=1)
        if floor is not None:
            r = sum(ur[w][i] for w, i in enumerate(head)) + ur[-1]
            ok &= r >= floor - tol
        count += len(rows)
        if not ok.any():
            continue
        k = int(np.argmax(np.where(ok, s, -np.inf)))
        if s[k] > best:
            best, arg = float(s[k]), list(head) + [k]
    K = rows[arg] if arg is not None else None
    return GridResult(best, K, count)


def grid_bp(game: Game, step: float = 0.02, tol: float = 1e-12) -> GridResult:
    """Best obedient lattice kernel."""
    return _grid_search(game, step, True, None, tol)


def grid_meu(game: Game, step: float = 0.02, tol: float = 1e-12) -> GridResult:
    """Best lattice kernel leaving the receiver at least the no-information value (no obedience)."""
    floor = float(np.max(game.receiver_payoff @ game.prior))
    return _grid_search(game, step, False, floor, tol)


@dataclass
class BinaryGridResult:
    value: float
    hi: Optional[np.ndarray]
    lo: Optional[np.ndarray]
    lam: float
    evaluated: int


def grid_binary(game: Game, attitude_r: Attitude, attitude_s: Attitude = None, step: float = 0.1, tol: float = 1e-12) -> BinaryGridResult:
    """Best two-point ambiguous experiment over lattice kernels.

    Pairs whose effective mixture is obedient are scored at the end of the
    feasible effective-weight interval; a pair (i, i) is a plain experiment.
    """
    attitude_s = attitude_s or Linear()
    K = grid_kernels(game.n_states, game.n_actions, step)
    s = _kernels.batch_payoffs(K, game.prior, game.sender_payoff)
    r = _kernels.batch_payoffs(K, game.prior, game.receiver_payoff)
    nA = game.n_actions
    cols = [a * nA + b for a in range(nA) for b in range(nA) if a != b]
    O = _kernels.batch_obedience(K, game.prior, game.receiver_payoff)[:, cols]
    fs = attitude_s.value(s)
    d = np.exp(attitude_r.log_deriv(r))
    v, i, j, lam = _kernels.best_binary_split(fs, d, O, tol)
    if i < 0:
        return BinaryGridResult(-np.inf, None, None, 0.0, len(K))
    return BinaryGridResult(float(attitude_s.inverse(v)), K[i], K[j], lam, len(K) * (len(K) + 1) // 2)


def vertex_enumeration(c: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> Optional[tuple]:
    """max c @ x s.t. A x = b, x >= 0 by trying every basis. Returns (value, x) or None if infeasible.

    Only sensible for tiny programs; assumes a bounded optimum when feasible.
    """
    m, n = A.shape
    best = None
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.any(xb < -tol):
            continue
        x = np.zeros(n)
        x[list(cols)] = xb
        v = float(c @ x)
        if best is None or v > best[0] + 1e-12:
            best = (v, x)
    return best
