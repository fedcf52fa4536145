"""Pre-existing ambiguity over the prior, given by a finite distribution eta over priors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ambiguity import (
    AmbiguousExperiment,
    Attitude,
    Linear,
    _check_prob,
    is_obedient_ambiguous,
    payoff_vector,
)
from .bp import solve_bp
from .config import DEFAULT_CONFIG, DEFAULT_TOL, SolverConfig
from .game import (
    DomainError,
    Game,
    InstanceError,
    is_obedient,
    kernel_of,
    obedience_rows,
    obedient_payoff,
    row_sum_rows,
)
from .lp import LinearProgram, solve_lp
from .splitting import SplitTriple, binary_improvement


@dataclass(frozen=True, eq=False)
class PriorAmbiguity:
    priors: np.ndarray  # (n, |states|)
    weights: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.array(self.priors, dtype=float))
        w = np.array(self.weights, dtype=float).ravel()
        if P.shape[0] != w.size:
            raise InstanceError(f"{P.shape[0]} priors but {w.size} weights")
        for i, p in enumerate(P):
            _check_prob(p, f"prior {i}")
        _check_prob(w, "prior weights")
        P.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "priors", P)
        object.__setattr__(self, "weights", w)

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.priors

    def __len__(self):
        return len(self.weights)

    def check_game(self, game: Game):
        if self.priors.shape[1] != game.n_states:
            raise InstanceError(f"priors have {self.priors.shape[1]} entries, the game has {game.n_states} states")

    @classmethod
    def singleton(cls, p) -> "PriorAmbiguity":
        return cls([p], [1.0])

    @classmethod
    def two_point(cls, p, d, delta: float) -> "PriorAmbiguity":
        """Mean-preserving eta = {p + delta d, p - delta d} with equal weights."""
        p, d = np.asarray(p, float), np.asarray(d, float)
        return cls([p + delta * d, p - delta * d], [0.5, 0.5])

    def to_dict(self) -> dict:
        return {"priors": self.priors.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PriorAmbiguity":
        for k in ("priors", "weights"):
            if k not in d:
                raise InstanceError(f"prior ambiguity is missing field {k!r}")
        return cls(d["priors"], d["weights"])


@dataclass
class EtaObedience:
    obedient: bool
    joint: np.ndarray  # (states, actions)
    weights: np.ndarray  # (priors, experiments), sums to 1
    slack: np.ndarray  # (actions, actions)
    min_slack: float

    def __bool__(self):
        return self.obedient

    def to_dict(self) -> dict:
        return {"obedient": self.obedient, "joint": self.joint.tolist(), "weights": self.weights.tolist(), "min_slack": self.min_slack}


def joint_slack(game: Game, joint: np.ndarray) -> np.ndarray:
    """slack[a, b] = sum_w pi(w, a) (u_r(a, w) - u_r(b, w)); obedience needs all >= 0."""
    R = game.receiver_payoff
    return np.einsum("wa,aw->a", joint, R)[:, None] - joint.T @ R.T


def eta_weights(game: Game, ambiguous: AmbiguousExperiment, eta: PriorAmbiguity, attitude_r: Attitude) -> np.ndarray:
    """w[p, theta] proportional to eta_p mu_theta phi_r'(u_r(p, sigma_theta))."""
    eta.check_game(game)
    mu = ambiguous.weights
    logs = np.full((len(eta), len(ambiguous)), -np.inf)
    for i, p in enumerate(eta.priors):
        r = payoff_vector(game.with_prior(p), ambiguous, "receiver")
        attitude_r.check(r, what=f"receiver payoff under prior {i}")
        ld = attitude_r.log_deriv(r)
        ok = (mu > 0) & (eta.weights[i] > 0)
        logs[i, ok] = np.log(eta.weights[i]) + np.log(mu[ok]) + ld[ok]
    top = logs.max()
    W = np.exp(logs - top)
    return W / W.sum()


def eta_joint(game: Game, ambiguous: AmbiguousExperiment, eta: PriorAmbiguity, attitude_r: Attitude) -> tuple:
    W = eta_weights(game, ambiguous, eta, attitude_r)
    Ks = ambiguous.kernels
    joint = np.einsum("pt,pw,twa->wa", W, eta.priors, Ks)
    return joint, W


def is_obedient_under_eta(
    game: Game, ambiguous: AmbiguousExperiment, eta: PriorAmbiguity, attitude_r: Attitude, tol: float = DEFAULT_TOL.obedience
) -> EtaObedience:
    """Obedience of the eta-weighted joint distribution over states and recommendations."""
    eta.check_game(game)
    if len(eta) == 1:
        p = eta.priors[0]
        res = is_obedient_ambiguous(game.with_prior(p), ambiguous, attitude_r, tol)
        joint = p[:, None] * res.effective.kernel
        return EtaObedience(res.obedient, joint, res.effective_measure[None, :], res.report.slack, res.report.min_slack)
    joint, W = eta_joint(game, ambiguous, eta, attitude_r)
    S = joint_slack(game, joint)
    m = float(S.min())
    return EtaObedience(bool(m >= -tol), joint, W, S, m)


def per_prior_decomposition(game: Game, ambiguous: AmbiguousExperiment, eta: PriorAmbiguity, attitude_r: Attitude) -> tuple:
    """(c, joints): the eta joint equals sum_p c_p * joints[p], each p x sigma*_p."""
    c = eta_weights(game, ambiguous, eta, attitude_r).sum(axis=1)
    joints = []
    for p in eta.priors:
        res = is_obedient_ambiguous(game.with_prior(p), ambiguous, attitude_r)
        joints.append(p[:, None] * res.effective.kernel)
    return c, np.array(joints)


def neutral_sender_value(game: Game, ambiguous: AmbiguousExperiment, eta: PriorAmbiguity) -> float:
    """Ambiguity-neutral sender: sum_p eta_p sum_theta mu_theta u_s(p, sigma_theta)."""
    return float(sum(e * (ambiguous.weights @ payoff_vector(game.with_prior(p), ambiguous, "sender")) for e, p in zip(eta.weights, eta.priors)))


# ---------------------------------------------------- binary improvement


@dataclass
class EtaImprovement:
    ambiguous: AmbiguousExperiment
    mu_bar: float
    lam: float
    per_prior_mu: list
    binding_prior: int
    obedient: bool
    sender_value: float
    base_value: float
    sender_gain: float

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ambiguous"] = self.ambiguous.to_dict()
        return d


def binary_improvement_under_eta(
    game: Game, base, split: SplitTriple, eta: PriorAmbiguity, attitude_r: Attitude, attitude_s: Optional[Attitude] = None
):
    """mu_bar = min over priors of the point-prior weight; obedient under eta with a strict neutral-sender gain."""
    eta.check_game(game)
    if attitude_r.is_affine:
        raise DomainError("improvement under prior ambiguity needs a strictly concave phi_r")
    if len(eta) == 1:
        return binary_improvement(game.with_prior(eta.priors[0]), base, split, attitude_r, attitude_s)
    B = kernel_of(base)
    H, L, lam = split.hi.kernel, split.lo.kernel, split.lam
    if not 0 < lam < 1:
        raise DomainError(f"split weight must lie in (0, 1) (got {lam})")
    err = float(np.abs(lam * H + (1 - lam) * L - B).max())
    if err > 1e-10:
        raise DomainError(f"split does not reproduce the base experiment (max error {err:.3g})")
    problems, mus = [], []
    for i, p in enumerate(eta.priors):
        g = game.with_prior(p)
        if not is_obedient(g, B).obedient:
            problems.append(f"prior {i}: base not obedient")
        if not is_obedient(g, L).obedient:
            problems.append(f"prior {i}: lo not obedient")
        sh, sl = obedient_payoff(g, H, "sender"), obedient_payoff(g, L, "sender")
        rh, rl = obedient_payoff(g, H, "receiver"), obedient_payoff(g, L, "receiver")
        if not sh > sl:
            problems.append(f"prior {i}: sender payoff of hi {sh:.6g} not above lo {sl:.6g}")
        if not rh > rl:
            problems.append(f"prior {i}: receiver payoff of hi {rh:.6g} not above lo {rl:.6g}")
        if not problems:
            attitude_r.check([rh, rl], what=f"receiver payoff under prior {i}")
            lh, ll = attitude_r.log_deriv(rh), attitude_r.log_deriv(rl)
            # lam phi'(lo) / (lam phi'(lo) + (1-lam) phi'(hi)) in log form
            mus.append(float(1.0 / (1.0 + (1 - lam) / lam * np.exp(lh - ll))))
    if problems:
        raise DomainError("preconditions fail: " + "; ".join(problems))
    k = int(np.argmin(mus))
    mu_bar = mus[k]
    amb = AmbiguousExperiment([split.hi, split.lo], [mu_bar, 1 - mu_bar])
    ob = is_obedient_under_eta(game, amb, eta, attitude_r)
    val = neutral_sender_value(game, amb, eta)
    base_val = float(sum(e * obedient_payoff(game.with_prior(p), B, "sender") for e, p in zip(eta.weights, eta.priors)))
    return EtaImprovement(amb, mu_bar, lam, mus, k, ob.obedient, val, base_val, val - base_val)


# ---------------------------------------------------------- robustness


@dataclass
class DeltaReport:
    delta: float
    witness: AmbiguousExperiment
    witness_value: float
    bp_value: float
    interior_slack: float
    mix: float
    directions: int
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["witness"] = self.witness.to_dict()
        return d


def interior_witness(game: Game, tol=DEFAULT_TOL) -> tuple:
    """Obedient kernel maximizing the smallest obedience slack; (kernel, slack)."""
    nW, nA = game.n_states, game.n_actions
    n = nW * nA
    G, _ = obedience_rows(game)
    E = row_sum_rows(game)
    if len(G) == 0:
        return np.full((nW, nA), 1.0 / nA), np.inf
    A = np.vstack([np.hstack([G, -np.ones((len(G), 1))]), np.hstack([E, np.zeros((nW, 1))])])
    rel = [">="] * len(G) + ["="] * nW
    b = np.concatenate([np.zeros(len(G)), np.ones(nW)])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    bounds = [(0.0, np.inf)] * n + [(-np.inf, 1.0)]
    res = solve_lp(LinearProgram(c, A, rel, b, bounds), tol)
    if not res.ok:
        return None, -np.inf
    return np.maximum(res.x[:n].reshape(nW, nA), 0.0), float(res.value)


def _off_diagonal_min(S: np.ndarray) -> float:
    off = ~np.eye(S.shape[0], dtype=bool)
    return float(S[off].min()) if off.any() else np.inf


def _directions(n_states: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((count, n_states))
    D -= D.mean(axis=1, keepdims=True)
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def robustness_delta(
    game: Game,
    attitude_r: Attitude,
    config: SolverConfig = DEFAULT_CONFIG,
    directions: int = 16,
    ambiguous: Optional[AmbiguousExperiment] = None,
    margin: float = 1e-6,
) -> Optional[DeltaReport]:
    """Largest tested radius delta at which mean-preserving two-point eta keeps the benefit.

    The beneficial experiment is pushed toward the slack-maximizing obedient
    kernel until its effective experiment has strictly positive slack, then
    delta is bisected over seeded directions. Returns None when there is no
    benefit or no strictly obedient kernel.
    """
    from .solver import solve_ambiguous

    p = game.prior
    if np.any(p <= 0):
        return None
    bp = solve_bp(game).value
    if ambiguous is None:
        sol = solve_ambiguous(game, Linear(), attitude_r, config)
        if sol.value <= bp + margin:
            return None
        ambiguous = sol.ambiguous
    K0, slack0 = interior_witness(game, config.tol)
    if K0 is None or slack0 <= config.tol.obedience:
        return None
    eps, mixed = 0.5, None
    while eps > 1e-8:
        Ks = [(1 - eps) * e.kernel + eps * K0 for e in ambiguous.experiments]
        cand = AmbiguousExperiment.from_kernels(game, Ks, ambiguous.weights)
        ob = is_obedient_ambiguous(game, cand, attitude_r)
        val = float(cand.weights @ payoff_vector(game, cand, "sender"))
        if _off_diagonal_min(ob.report.slack) > 1e-9 and val > bp + margin:
            mixed = cand
            break
        eps /= 2
    if mixed is None:
        return None
    wval = float(mixed.weights @ payoff_vector(game, mixed, "sender"))
    D = _directions(game.n_states, directions, config.seed)

    def room(d):
        # largest radius keeping p +/- r d a probability vector
        with np.errstate(divide="ignore"):
            r = np.where(np.abs(d) > 0, p / np.abs(d), np.inf)
        return float(r.min())

    cap = min(min(room(d) for d in D) * (1 - 1e-9), 1.0)
    trace = []

    def passes(delta):
        for d in D:
            eta = PriorAmbiguity.two_point(p, d, delta)
            try:
                ok = is_obedient_under_eta(game, mixed, eta, attitude_r).obedient
            except DomainError:
                ok = False
            if not (ok and neutral_sender_value(game, mixed, eta) > bp + margin):
                return False
        return True

    lo, hi = 0.0, cap
    if passes(hi):
        lo = hi
    else:
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            ok = passes(mid)
            trace.append((mid, ok))
            if ok:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-6 * cap:
                break
    if lo <= 0:
        return None
    return DeltaReport(lo, mixed, wval, bp, slack0, eps, directions, trace)
