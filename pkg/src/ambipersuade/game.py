"""Game primitives: payoffs, best responses, obedience and canonical form."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np

from .config import DEFAULT_TOL

Player = Literal["sender", "receiver"]


class InstanceError(ValueError):
    """Malformed or dimensionally inconsistent input."""


class DomainError(ValueError):
    """Input is well formed but outside the domain of an operation."""


def _as_labels(xs, name) -> tuple:
    labels = tuple(str(x) for x in xs)
    if not labels:
        raise InstanceError(f"{name} must be non-empty")
    if len(set(labels)) != len(labels):
        raise InstanceError(f"{name} labels must be distinct")
    return labels


def _check_prob(vec, name, tol=DEFAULT_TOL.prob_sum, axis=-1):
    vec = np.asarray(vec, dtype=float)
    if not np.all(np.isfinite(vec)):
        raise InstanceError(f"{name} has non-finite entries")
    if np.any(vec < 0):
        raise InstanceError(f"{name} has negative entries")
    sums = vec.sum(axis=axis)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        raise InstanceError(f"{name} does not sum to 1 (got {np.ravel(sums)[np.ravel(bad)][0]!r})")
    return vec


@dataclass(frozen=True, eq=False)
class Game:
    states: tuple
    actions: tuple
    prior: np.ndarray
    sender_payoff: np.ndarray  # (action, state)
    receiver_payoff: np.ndarray  # (action, state)

    def __post_init__(self):
        states = _as_labels(self.states, "states")
        actions = _as_labels(self.actions, "actions")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        prior = np.asarray(self.prior, dtype=float)
        if prior.shape != (len(states),):
            raise InstanceError(f"prior has shape {prior.shape}, expected ({len(states)},) along the state axis")
        _check_prob(prior, "prior")
        object.__setattr__(self, "prior", prior)
        for name in ("sender_payoff", "receiver_payoff"):
            U = np.asarray(getattr(self, name), dtype=float)
            if U.shape != (len(actions), len(states)):
                raise InstanceError(
                    f"{name} has shape {U.shape}, expected (|actions|, |states|) = ({len(actions)}, {len(states)})"
                )
            if not np.all(np.isfinite(U)):
                raise InstanceError(f"{name} has non-finite entries")
            U.setflags(write=False)
            object.__setattr__(self, name, U)
        prior.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def payoff(self, player: Player) -> np.ndarray:
        if player == "sender":
            return self.sender_payoff
        if player == "receiver":
            return self.receiver_payoff
        raise InstanceError(f"unknown player {player!r}")

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "actions": list(self.actions),
            "prior": self.prior.tolist(),
            "sender_payoff": self.sender_payoff.tolist(),
            "receiver_payoff": self.receiver_payoff.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Game":
        missing = [k for k in ("states", "actions", "prior", "sender_payoff", "receiver_payoff") if k not in d]
        if missing:
            raise InstanceError(f"game is missing field {missing[0]!r}")
        return cls(d["states"], d["actions"], d["prior"], d["sender_payoff"], d["receiver_payoff"])

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_prior(self, prior) -> "Game":
        return Game(self.states, self.actions, prior, self.sender_payoff, self.receiver_payoff)


@dataclass(frozen=True, eq=False)
class Experiment:
    """State to message kernel, rows indexed by state."""

    kernel: np.ndarray
    messages: Optional[tuple] = None

    def __post_init__(self):
        K = np.array(self.kernel, dtype=float)
        if K.ndim != 2:
            raise InstanceError(f"experiment kernel must be 2-d (state, message), got ndim={K.ndim}")
        _check_prob(K, "experiment kernel row", axis=1)
        K.setflags(write=False)
        object.__setattr__(self, "kernel", K)
        msgs = self.messages
        msgs = tuple(f"m{j}" for j in range(K.shape[1])) if msgs is None else _as_labels(msgs, "messages")
        if len(msgs) != K.shape[1]:
            raise InstanceError(f"messages has {len(msgs)} labels but kernel has {K.shape[1]} message columns")
        object.__setattr__(self, "messages", msgs)

    @classmethod
    def canonical(cls, game: Game, kernel) -> "Experiment":
        return cls(kernel, game.actions)

    def is_canonical(self, game: Game) -> bool:
        return self.messages == game.actions

    def to_dict(self) -> dict:
        return {"messages": list(self.messages), "kernel": self.kernel.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Experiment":
        if "kernel" not in d:
            raise InstanceError("experiment is missing field 'kernel'")
        return cls(d["kernel"], d.get("messages"))


@dataclass(frozen=True, eq=False)
class ReceiverStrategy:
    """Message to action kernel, rows indexed by message."""

    kernel: np.ndarray

    def __post_init__(self):
        K = np.array(self.kernel, dtype=float)
        if K.ndim != 2:
            raise InstanceError("strategy kernel must be 2-d (message, action)")
        _check_prob(K, "strategy kernel row", axis=1)
        K.setflags(write=False)
        object.__setattr__(self, "kernel", K)

    @classmethod
    def obedient(cls, n_actions: int) -> "ReceiverStrategy":
        return cls(np.eye(n_actions))

    @classmethod
    def constant(cls, n_messages: int, n_actions: int, action: int) -> "ReceiverStrategy":
        K = np.zeros((n_messages, n_actions))
        K[:, action] = 1.0
        return cls(K)


KernelLike = Union[Experiment, np.ndarray, Sequence]


def kernel_of(x: KernelLike) -> np.ndarray:
    return x.kernel if isinstance(x, (Experiment, ReceiverStrategy)) else np.asarray(x, dtype=float)


def _check_exp(game: Game, K: np.ndarray):
    if K.ndim != 2 or K.shape[0] != game.n_states:
        raise InstanceError(f"experiment has {K.shape[0] if K.ndim else 0} rows on the state axis, game has {game.n_states}")


def expected_payoff(game: Game, experiment: KernelLike, strategy: Optional[Union[ReceiverStrategy, np.ndarray]], player: Player) -> float:
    """sum over (state, message, action) of p * sigma * tau * u. ``strategy=None`` means obedience."""
    S = kernel_of(experiment)
    _check_exp(game, S)
    if strategy is None:
        T = np.eye(S.shape[1])
        if S.shape[1] != game.n_actions:
            raise InstanceError(f"obedience needs a canonical experiment: message axis {S.shape[1]} != action axis {game.n_actions}")
    else:
        T = kernel_of(strategy)
    if T.shape[0] != S.shape[1]:
        raise InstanceError(f"strategy message axis {T.shape[0]} != experiment message axis {S.shape[1]}")
    if T.shape[1] != game.n_actions:
        raise InstanceError(f"strategy action axis {T.shape[1]} != game action axis {game.n_actions}")
    U = game.payoff(player)
    joint = game.prior[:, None] * (S @ T)  # (state, action)
    return float(np.sum(joint * U.T))


def obedient_payoff(game: Game, kernel: np.ndarray, player: Player) -> float:
    """Payoff of a canonical kernel under tau*, without validation."""
    return float(np.einsum("w,wa,aw->", game.prior, kernel, game.payoff(player)))


def outcome(game: Game, kernel: np.ndarray) -> np.ndarray:
    """Joint (state, action) distribution induced by a canonical kernel under obedience."""
    return game.prior[:, None] * kernel


@dataclass
class BestResponse:
    actions: list  # per message: list of optimal action indices
    value: float
    message_prob: np.ndarray

    def strategies(self, n_actions: int) -> list:
        """All pure strategies selecting from the argmax sets."""
        import itertools

        out = []
        for combo in itertools.product(*self.actions):
            K = np.zeros((len(self.actions), n_actions))
            K[np.arange(len(combo)), list(combo)] = 1.0
            out.append(ReceiverStrategy(K))
        return out


def best_response(game: Game, experiment: KernelLike, tol: float = DEFAULT_TOL.payoff) -> BestResponse:
    S = kernel_of(experiment)
    _check_exp(game, S)
    # unnormalized posterior value of action a at message m
    V = np.einsum("w,wm,aw->ma", game.prior, S, game.receiver_payoff)
    prob = game.prior @ S
    acts, value = [], 0.0
    for m in range(S.shape[1]):
        if prob[m] <= DEFAULT_TOL.support:
            acts.append(list(range(game.n_actions)))
            continue
        best = V[m].max()
        acts.append([a for a in range(game.n_actions) if V[m, a] >= best - tol * max(1.0, abs(best))])
        value += best
    return BestResponse(acts, float(value), prob)


@dataclass
class ObedienceReport:
    obedient: bool
    slack: np.ndarray  # (a, b) matrix of sum_w p sigma(a|w) (u_r(a,w) - u_r(b,w))
    min_slack: float

    def __bool__(self) -> bool:
        return self.obedient

    def worst_pair(self) -> tuple:
        i = int(np.argmin(self.slack))
        return divmod(i, self.slack.shape[1])


def obedience_matrix(game: Game) -> np.ndarray:
    """Coefficient tensor C[a, b, w, a'] such that slack(a, b) = sum C * sigma[w, a']."""
    R, p = game.receiver_payoff, game.prior
    nA, nW = R.shape
    C = np.zeros((nA, nA, nW, nA))
    for a in range(nA):
        C[a, :, :, a] = p[None, :] * (R[a][None, :] - R)
    return C


def obedience_slack(game: Game, kernel: np.ndarray) -> np.ndarray:
    R = game.receiver_payoff
    D = R[:, None, :] - R[None, :, :]
    return np.einsum("w,wa,abw->ab", game.prior, kernel, D)


def is_obedient(game: Game, experiment: KernelLike, tol: float = DEFAULT_TOL.obedience) -> ObedienceReport:
    if isinstance(experiment, Experiment) and not experiment.is_canonical(game):
        raise InstanceError("experiment is not canonical; call canonicalize() first")
    S = kernel_of(experiment)
    _check_exp(game, S)
    if S.shape[1] != game.n_actions:
        raise InstanceError("experiment is not canonical; call canonicalize() first")
    slack = obedience_slack(game, S)
    return ObedienceReport(bool(slack.min() >= -tol), slack, float(slack.min()))


def canonicalize(game: Game, ambiguous, strategy: ReceiverStrategy):
    """Push each experiment through the strategy: sigma*(a|w) = sum_m tau(a|m) sigma(m|w)."""
    from .ambiguity import AmbiguousExperiment

    single = isinstance(ambiguous, Experiment)
    amb = AmbiguousExperiment([ambiguous], [1.0]) if single else ambiguous
    T = kernel_of(strategy)
    out = []
    for e in amb.experiments:
        S = kernel_of(e)
        _check_exp(game, S)
        if T.shape[0] != S.shape[1]:
            raise InstanceError(f"strategy message axis {T.shape[0]} != experiment message axis {S.shape[1]}")
        if T.shape[1] != game.n_actions:
            raise InstanceError(f"strategy action axis {T.shape[1]} != game action axis {game.n_actions}")
        K = np.clip(S @ T, 0.0, None)
        K /= K.sum(axis=1, keepdims=True)
        out.append(Experiment(K, game.actions))
    res = AmbiguousExperiment(out, amb.weights)
    return res.experiments[0] if single else res


def uninformative(game: Game, action: int) -> np.ndarray:
    K = np.zeros((game.n_states, game.n_actions))
    K[:, action] = 1.0
    return K


def prior_optimal_action(game: Game) -> int:
    """Receiver-optimal action at the prior; ties go to the sender-preferred one, then to order."""
    vr = game.receiver_payoff @ game.prior
    vs = game.sender_payoff @ game.prior
    best = vr.max()
    cands = [a for a in range(game.n_actions) if vr[a] >= best - DEFAULT_TOL.payoff]
    return max(cands, key=lambda a: (vs[a], -a))


def clean_kernel(K: np.ndarray, tol: float = DEFAULT_TOL.support) -> np.ndarray:
    """Clip round-off negatives and tiny entries, then renormalize rows."""
    K = np.where(np.asarray(K, dtype=float) > tol, K, 0.0)
    return K / K.sum(axis=1, keepdims=True)


def obedience_rows(game: Game) -> tuple:
    """Rows G with G @ vec(sigma) >= 0 for every ordered pair a != b.

    ``vec`` flattens a (state, action) kernel in row-major order. Returns
    ``(G, pairs)``.
    """
    R, p = game.receiver_payoff, game.prior
    nA, nW = R.shape
    pairs = [(a, b) for a in range(nA) for b in range(nA) if a != b]
    G = np.zeros((len(pairs), nW * nA))
    for k, (a, b) in enumerate(pairs):
        G[k, np.arange(nW) * nA + a] = p * (R[a] - R[b])
    return G, pairs


def row_sum_rows(game: Game) -> np.ndarray:
    nW, nA = game.n_states, game.n_actions
    E = np.zeros((nW, nW * nA))
    for w in range(nW):
        E[w, w * nA : (w + 1) * nA] = 1.0
    return E


def payoff_row(game: Game, player: Player) -> np.ndarray:
    """Coefficients c with c @ vec(sigma) = u_i(sigma, tau*)."""
    return (game.prior[:, None] * game.payoff(player).T).ravel()
