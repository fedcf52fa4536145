"""Bayesian persuasion baseline: the experiment-space LP and the two-state curve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .game import (
    DomainError,
    Experiment,
    Game,
    ObedienceReport,
    clean_kernel,
    is_obedient,
    obedience_rows,
    obedient_payoff,
    payoff_row,
    row_sum_rows,
)
from .lp import LinearProgram, solve_lp


class InternalError(RuntimeError):
    pass


@dataclass
class BPSolution:
    value: float
    experiment: Experiment
    obedience: ObedienceReport

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "experiment": self.experiment.to_dict(),
            "obedient": self.obedience.obedient,
            "min_slack": self.obedience.min_slack,
        }


def solve_bp(game: Game, tol: Tolerances = DEFAULT_TOL) -> BPSolution:
    """Maximize u_s(sigma, tau*) over obedient canonical kernels."""
    nW, nA = game.n_states, game.n_actions
    G, _ = obedience_rows(game)
    E = row_sum_rows(game)
    A = np.vstack([G, E])
    rel = [">="] * len(G) + ["="] * nW
    b = np.concatenate([np.zeros(len(G)), np.ones(nW)])
    res = solve_lp(LinearProgram(payoff_row(game, "sender"), A, rel, b), tol)
    if not res.ok:
        raise InternalError(f"BP program reported {res.status.value}; an uninformative obedient experiment always exists")
    K = clean_kernel(res.x.reshape(nW, nA), tol.support)
    return BPSolution(obedient_payoff(game, K, "sender"), Experiment(K, game.actions), is_obedient(game, K, tol.obedience))


# ------------------------------------------------------ two-state curve


@dataclass
class CurveTable:
    belief: np.ndarray  # Pr(second state)
    action_sets: list
    iu: np.ndarray
    cav_iu: np.ndarray

    def rows(self):
        for q, acts, v, c in zip(self.belief, self.action_sets, self.iu, self.cav_iu):
            yield float(q), acts, float(v), float(c)

    def to_csv(self) -> str:
        lines = ["belief,iu,cav_iu"]
        lines += [f"{q:.12g},{v:.12g},{c:.12g}" for q, _, v, c in self.rows()]
        return "\n".join(lines) + "\n"

    def cav_at(self, q: float) -> float:
        return float(np.interp(q, self.belief, self.cav_iu))


def upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull of points sorted by x."""
    hull: list = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross >= 0:  # a lies on or below the chord o-i
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


def indirect_utility_curve(game: Game, resolution: int = 200) -> CurveTable:
    """Sender's indirect utility over Pr(w2) and its concave envelope."""
    if game.n_states != 2:
        raise DomainError(f"the indirect utility curve needs exactly 2 states (game has {game.n_states})")
    if resolution < 1:
        raise DomainError("resolution must be positive")
    R, S = game.receiver_payoff, game.sender_payoff
    qs = set(np.linspace(0.0, 1.0, resolution + 1).tolist())
    qs.add(float(game.prior[1]))
    slope = R[:, 1] - R[:, 0]
    for a in range(game.n_actions):
        for b in range(a + 1, game.n_actions):
            den = slope[a] - slope[b]
            if abs(den) > 1e-15:
                q = (R[b, 0] - R[a, 0]) / den
                if 0.0 <= q <= 1.0:
                    qs.add(float(q))
    q = np.array(sorted(qs))
    vr = np.outer(1 - q, R[:, 0]) + np.outer(q, R[:, 1])
    vs = np.outer(1 - q, S[:, 0]) + np.outer(q, S[:, 1])
    best = vr.max(axis=1, keepdims=True)
    opt = vr >= best - DEFAULT_TOL.payoff * np.maximum(1.0, np.abs(best))
    iu = np.where(opt, vs, -np.inf).max(axis=1)
    sets = [[game.actions[a] for a in np.nonzero(row)[0]] for row in opt]
    h = upper_hull(q, iu)
    cav = np.interp(q, q[h], iu[h])
    return CurveTable(q, sets, iu, cav)
