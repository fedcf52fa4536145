"""Maxmin (MEU) receiver with an ambiguity-neutral sender.

Only the receiver's worst experiments discipline obedience, so the sender's
supremum is the best payoff subject to leaving the receiver at least the
no-information value. It is approached, not attained, by a binary witness
putting weight mu -> 1 on the sender-optimal experiment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ambiguity import AmbiguousExperiment, payoff_vector
from .bp import InternalError, solve_bp
from .config import DEFAULT_TOL, Tolerances
from .game import (
    Experiment,
    Game,
    clean_kernel,
    is_obedient,
    obedience_rows,
    obedient_payoff,
    payoff_row,
    prior_optimal_action,
    row_sum_rows,
    uninformative,
)
from .lp import LinearProgram, solve_lp

STRICT_MARGIN = 1e-9


def outside_option(game: Game) -> float:
    """The receiver's value with no information: max_a sum_w p(w) u_r(a, w)."""
    return float(np.max(game.receiver_payoff @ game.prior))


def meu_obedience(game: Game, ambiguous: AmbiguousExperiment, tol: float = DEFAULT_TOL.payoff, strong: bool = False):
    """Obedience for a maxmin receiver.

    Returns ``(obedient, kernel)`` where ``kernel`` is the mu-renormalized
    mixture of the receiver-payoff minimizers in the support. ``strong``
    also requires that mixture to recommend every action the whole tuple
    can recommend.
    """
    amb = ambiguous.restrict()
    r = payoff_vector(game, amb, "receiver")
    arg = np.nonzero(r <= r.min() + tol)[0]
    w = amb.weights[arg] / amb.weights[arg].sum()
    K = np.tensordot(w, amb.kernels[arg], axes=1)
    ok = bool(is_obedient(game, K).obedient)
    if strong:
        used = lambda X: (game.prior @ X) > DEFAULT_TOL.support
        ok = ok and bool(np.array_equal(used(K), used(np.tensordot(amb.weights, amb.kernels, axes=1))))
    return ok, K


def best_response_set(game: Game, tol: Tolerances = DEFAULT_TOL) -> tuple:
    """A_0: actions optimal for some belief supported on supp(p), one LP each."""
    R = game.receiver_payoff
    supp = np.nonzero(game.prior > tol.support)[0]
    out = []
    for a in range(game.n_actions):
        others = [b for b in range(game.n_actions) if b != a]
        A = np.vstack([(R[a, supp] - R[b, supp]) for b in others] + [np.ones(supp.size)]) if others else np.ones((1, supp.size))
        rel = [">="] * len(others) + ["="]
        b = np.concatenate([np.zeros(len(others)), [1.0]])
        if solve_lp(LinearProgram(np.zeros(supp.size), A, rel, b), tol).ok:
            out.append(a)
    return tuple(out)


def _floor_program(game: Game, floor: float, allowed=None, obedient: bool = False, objective: str = "sender", tol=DEFAULT_TOL):
    nW, nA = game.n_states, game.n_actions
    E = row_sum_rows(game)
    rows, rel, b = [E], ["="] * nW, [np.ones(nW)]
    if floor is not None:
        rows.append(payoff_row(game, "receiver")[None, :])
        rel.append(">=")
        b.append([floor])
    if obedient:
        G, _ = obedience_rows(game)
        rows.append(G)
        rel += [">="] * len(G)
        b.append(np.zeros(len(G)))
    bounds = None
    if allowed is not None:
        bounds = [(0.0, np.inf if (i % nA) in allowed else 0.0) for i in range(nW * nA)]
    res = solve_lp(LinearProgram(payoff_row(game, objective), np.vstack(rows), rel, np.concatenate(b), bounds), tol)
    if not res.ok:
        return None
    return clean_kernel(np.maximum(res.x.reshape(nW, nA), 0.0), tol.support)


def _full_support_obedient(game: Game, allowed, tol=DEFAULT_TOL) -> Optional[np.ndarray]:
    """An obedient kernel recommending every action in ``allowed`` with positive probability."""
    nW, nA = game.n_states, game.n_actions
    n = nW * nA
    G, _ = obedience_rows(game)
    E = row_sum_rows(game)
    # variables: vec(sigma), t ; maximize t subject to p-mass of each allowed action >= t
    M = np.zeros((len(allowed), n + 1))
    for k, a in enumerate(allowed):
        M[k, np.arange(nW) * nA + a] = game.prior
        M[k, -1] = -1.0
    A = np.vstack([np.hstack([G, np.zeros((len(G), 1))]), np.hstack([E, np.zeros((nW, 1))]), M])
    rel = [">="] * len(G) + ["="] * nW + [">="] * len(allowed)
    b = np.concatenate([np.zeros(len(G)), np.ones(nW), np.zeros(len(allowed))])
    bounds = [(0.0, np.inf if (i % nA) in allowed else 0.0) for i in range(n)] + [(0.0, 1.0)]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    res = solve_lp(LinearProgram(c, A, rel, b, bounds), tol)
    if not res.ok or res.value <= tol.support:
        return None
    return clean_kernel(np.maximum(res.x[:n].reshape(nW, nA), 0.0), tol.support)


@dataclass
class MEUSolution:
    supremum: float
    hi: Experiment
    lo: Experiment
    outside: float
    strong: bool
    A0: tuple
    degenerate: bool = False
    tilt: Optional[np.ndarray] = None  # receiver-improving kernel used when the floor binds
    tilde: Optional[np.ndarray] = None  # obedient, full support on A_0; mixed into lo with weight 1 - mu
    mu: float = 0.999

    def witness(self, game: Game, mu: Optional[float] = None) -> AmbiguousExperiment:
        """Binary witness with weight ``mu`` on hi."""
        mu = self.mu if mu is None else mu
        H = self.hi.kernel
        if self.tilt is not None:
            H = (1 - (1 - mu) ** 2) * H + (1 - mu) ** 2 * self.tilt
        if not 0.0 < mu < 1.0:
            raise ValueError("mu must lie in (0, 1); the supremum is not attained")
        L = self.lo.kernel
        if self.tilde is not None:
            L = mu * L + (1 - mu) * self.tilde
        return AmbiguousExperiment.from_kernels(game, [H, L], [mu, 1 - mu])

    def witness_value(self, game: Game, mu: Optional[float] = None) -> float:
        amb = self.witness(game, mu)
        return float(amb.weights @ payoff_vector(game, amb, "sender"))

    def to_dict(self) -> dict:
        return {
            "supremum": self.supremum,
            "witness": {"hi": self.hi.to_dict(), "lo": self.lo.to_dict(), "mu": self.mu, "mu_note": "sender value approaches the supremum as mu -> 1"},
            "outside_option": self.outside,
            "strong": self.strong,
            "A0": list(self.A0),
            "degenerate": self.degenerate,
            "tilde": None if self.tilde is None else self.tilde.tolist(),
        }


def _solve(game: Game, strong: bool, tol: Tolerances, mu: float) -> MEUSolution:
    floor = outside_option(game)
    a0 = prior_optimal_action(game)
    A0 = best_response_set(game, tol) if strong else tuple(range(game.n_actions))
    allowed = set(A0) if strong else None
    lo = uninformative(game, a0)
    # receiver-best kernel: if it cannot beat the floor, no ambiguity helps
    rbest = _floor_program(game, None, allowed, objective="receiver", tol=tol)
    if rbest is None or obedient_payoff(game, rbest, "receiver") <= floor + STRICT_MARGIN:
        bp = solve_bp(game, tol)
        return MEUSolution(bp.value, bp.experiment, Experiment(lo, game.actions), floor, strong, A0, degenerate=True, mu=mu)
    margin = STRICT_MARGIN if strong else 0.0
    K = _floor_program(game, floor + margin, allowed, tol=tol)
    if K is None:
        raise InternalError("supremum program infeasible although the receiver-best kernel beats the floor")
    if strong:
        tilde = _full_support_obedient(game, A0, tol)
        rob = _floor_program(game, None, allowed, obedient=True, objective="receiver", tol=tol)
        if tilde is None or rob is None:
            raise InternalError("no obedient kernel with full support on A0")
        tilde = 0.5 * tilde + 0.5 * rob
    else:
        tilde = None
    tilt = rbest if obedient_payoff(game, K, "receiver") <= obedient_payoff(game, lo, "receiver") + tol.payoff else None
    return MEUSolution(obedient_payoff(game, K, "sender"), Experiment(K, game.actions), Experiment(lo, game.actions), floor, strong, A0, tilt=tilt, tilde=tilde, mu=mu)


def meu_supremum(game: Game, tol: Tolerances = DEFAULT_TOL, mu: float = 0.999) -> MEUSolution:
    """max u_s(sigma) s.t. u_r(sigma) >= outside option, with no obedience constraint on sigma."""
    return _solve(game, False, tol, mu)


def meu_supremum_strong(game: Game, tol: Tolerances = DEFAULT_TOL, mu: float = 0.999) -> MEUSolution:
    """As ``meu_supremum`` with supp(sigma) in A_0 and the floor made strict by a small margin."""
    return _solve(game, True, tol, mu)
