"""Pareto-ranked splittings and the binary improvements built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .ambiguity import (
    AmbiguousExperiment,
    Attitude,
    Linear,
    inverse_effective_measure,
    is_obedient_ambiguous,
    probability_premium,
    smooth_value,
)
from .bp import solve_bp
from .config import DEFAULT_TOL
from .game import DomainError, Experiment, Game, is_obedient, kernel_of, obedient_payoff
from .solver import random_kernels, vertex_kernels


@dataclass
class SplitTriple:
    hi: Experiment
    lo: Experiment
    lam: float
    pareto_ranked: bool = True

    def base(self) -> np.ndarray:
        return self.lam * self.hi.kernel + (1 - self.lam) * self.lo.kernel

    def to_dict(self) -> dict:
        return {"hi": self.hi.to_dict(), "lo": self.lo.to_dict(), "lam": self.lam, "pareto_ranked": self.pareto_ranked}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitTriple":
        return cls(Experiment.from_dict(d["hi"]), Experiment.from_dict(d["lo"]), float(d["lam"]), bool(d.get("pareto_ranked", True)))


def _support(K: np.ndarray, tol=DEFAULT_TOL.support) -> np.ndarray:
    return K > tol


# ------------------------------------------------------------ spanning


@dataclass
class SpanningReport:
    spans: bool
    vectors: np.ndarray  # (k, 2): sender and receiver payoff changes
    designated: list  # a_w per state
    direction: Optional[np.ndarray]  # kernel change raising both payoffs by one unit

    def __bool__(self):
        return self.spans


def spanning_test(game: Game, experiment, designated: Optional[Sequence[int]] = None) -> SpanningReport:
    """Do the per-state payoff differences against a designated action span R^2?"""
    K = kernel_of(experiment)
    supp = _support(K)
    if designated is None:
        # highest probability recommendation, ties broken by action order
        designated = [int(np.argmax(K[w])) for w in range(game.n_states)]
    coords, vecs = [], []
    for w in range(game.n_states):
        aw = designated[w]
        if not supp[w, aw]:
            raise DomainError(f"designated action {game.actions[aw]!r} is outside the support in state {game.states[w]!r}")
        for a in np.nonzero(supp[w])[0]:
            if a == aw:
                continue
            p = game.prior[w]
            vecs.append([p * (game.sender_payoff[a, w] - game.sender_payoff[aw, w]), p * (game.receiver_payoff[a, w] - game.receiver_payoff[aw, w])])
            coords.append((w, int(a), aw))
    V = np.array(vecs).reshape(-1, 2)
    spans = V.shape[0] >= 2 and np.linalg.matrix_rank(V, tol=1e-10) == 2
    direction = None
    if spans:
        # least-norm d with V.T @ d = (1, 1)
        d = np.linalg.lstsq(V.T, np.ones(2), rcond=None)[0]
        D = np.zeros_like(K)
        for (w, a, aw), x in zip(coords, d):
            D[w, a] += x
            D[w, aw] -= x
        direction = D
    return SpanningReport(bool(spans), V, list(designated), direction)


# ------------------------------------------------------------- splitting


def max_split_weight(base: np.ndarray, hi: np.ndarray, tol=DEFAULT_TOL.support) -> float:
    """Largest lam with (base - lam*hi)/(1-lam) a valid kernel, given supp(hi) within supp(base)."""
    pos = hi > tol
    if np.any(pos & (base <= tol)):
        return 0.0
    return float(np.min(base[pos] / hi[pos]))


def split_with(base: np.ndarray, hi: np.ndarray, lam: float) -> np.ndarray:
    lo = (base - lam * hi) / (1 - lam)
    lo = np.where(lo > 1e-13, lo, 0.0)
    return lo / lo.sum(axis=1, keepdims=True)


def _choose_lam(base, hi, lam_mode, floor=1e-6):
    lmax = max_split_weight(base, hi)
    if lmax <= 0:
        return None
    if lam_mode == "max":
        # stay strictly inside (0, 1) so lo is well defined
        return min(lmax, 1 - 1e-9) if lmax < 1 else None
    lam = 0.5
    while lam >= floor:
        if lam <= lmax and lam < 1:
            return lam
        lam /= 2
    return None


def _candidates(game: Game, K: np.ndarray, budget: int, seed: int, direction):
    supp = _support(K)
    if direction is not None:
        items = direction if isinstance(direction, (list, tuple)) else [direction]
        for d in items:
            yield "given", kernel_of(d)
    supports = [list(np.nonzero(supp[w])[0]) for w in range(game.n_states)]
    for V in vertex_kernels(game.n_states, game.n_actions, supports):
        yield "extreme", V
    if budget > 0:
        R = random_kernels(game.n_states, game.n_actions, budget, seed)
        for X in R:
            X = np.where(supp, X + 1e-3, 0.0)
            yield "random", X / X.sum(axis=1, keepdims=True)
    rep = spanning_test(game, K)
    if rep.direction is not None:
        D = rep.direction
        neg = D < 0
        tmax = np.min(K[neg] / -D[neg]) if np.any(neg) else 1.0
        yield "spanning", K + 0.5 * tmax * D


def find_pareto_split(
    game: Game,
    experiment,
    direction=None,
    budget: int = 1000,
    seed: int = 0,
    lam_mode: str = "max",
    tol: float = DEFAULT_TOL.payoff,
    accept=None,
) -> Optional[SplitTriple]:
    """Search for hi on the support of ``experiment`` dominating it for both players.

    Candidates come from ``direction`` (if given), the extreme kernels on the
    support, seeded random kernels on the support and the spanning ray. The
    returned lo is (sigma - lam*hi)/(1 - lam). ``lam_mode="max"`` takes the
    largest feasible lam; ``"shrink"`` halves from 1/2 until lo is valid.
    ``accept(hi, lo, lam)`` can veto a candidate.
    """
    K = kernel_of(experiment)
    s0 = obedient_payoff(game, K, "sender")
    r0 = obedient_payoff(game, K, "receiver")
    for _, H in _candidates(game, K, budget, seed, direction):
        if np.any(_support(H) & ~_support(K)):
            continue
        sh = obedient_payoff(game, H, "sender")
        rh = obedient_payoff(game, H, "receiver")
        if not (sh > s0 + tol and rh > r0 + tol):
            continue
        lam = _choose_lam(K, H, lam_mode)
        if lam is None:
            continue
        L = split_with(K, H, lam)
        if accept is not None and not accept(H, L, lam):
            continue
        return SplitTriple(Experiment(H, game.actions), Experiment(L, game.actions), float(lam))
    return None


# ---------------------------------------------------- binary improvement


@dataclass
class ImprovementResult:
    ambiguous: AmbiguousExperiment
    mu_bar: float
    lam: float
    sender_value: float
    receiver_value: float
    sender_gain: float
    receiver_gain: float
    sender_premium: float
    obedient: bool
    em: np.ndarray
    reconstruct_error: float
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ambiguous": self.ambiguous.to_dict(),
            "mu_bar": self.mu_bar,
            "lam": self.lam,
            "sender_value": self.sender_value,
            "receiver_value": self.receiver_value,
            "sender_gain": self.sender_gain,
            "receiver_gain": self.receiver_gain,
            "sender_premium": self.sender_premium,
            "obedient": self.obedient,
            "effective_measure": self.em.tolist(),
            "checks": self.checks,
        }


def improvement_weight(r_hi: float, r_lo: float, lam: float, attitude_r: Attitude) -> float:
    """lam phi'(r_lo) / (lam phi'(r_lo) + (1-lam) phi'(r_hi)), via log-derivatives."""
    lh, ll = attitude_r.log_deriv(np.array([r_hi, r_lo]))
    # 1 / (1 + ((1-lam)/lam) exp(lh - ll))
    return float(1.0 / (1.0 + (1 - lam) / lam * np.exp(lh - ll)))


def binary_improvement(
    game: Game,
    base,
    split: SplitTriple,
    attitude_r: Attitude,
    attitude_s: Attitude = None,
    tol: float = 1e-9,
) -> ImprovementResult:
    """The binary ambiguous experiment ((hi, lo), (mu_bar, 1 - mu_bar)) built on ``split``."""
    attitude_s = attitude_s or Linear()
    B = kernel_of(base)
    H, L, lam = split.hi.kernel, split.lo.kernel, split.lam
    if not 0 < lam < 1:
        raise DomainError(f"split weight must lie in (0, 1) (got {lam})")
    err = float(np.abs(lam * H + (1 - lam) * L - B).max())
    if err > 1e-10:
        raise DomainError(f"split does not reproduce the base experiment (max error {err:.3g})")
    ob = is_obedient(game, B)
    if not ob.obedient:
        raise DomainError(f"base experiment is not obedient (min slack {ob.min_slack:.3g})")
    sh, sl = obedient_payoff(game, H, "sender"), obedient_payoff(game, L, "sender")
    rh, rl = obedient_payoff(game, H, "receiver"), obedient_payoff(game, L, "receiver")
    if not (sh > sl and rh > rl):
        raise DomainError(f"split is not Pareto-ranked: u_s {sh:.6g} vs {sl:.6g}, u_r {rh:.6g} vs {rl:.6g}")
    attitude_r.check([rh, rl], what="receiver payoff")
    mu_bar = improvement_weight(rh, rl, lam, attitude_r)
    amb = AmbiguousExperiment([split.hi, split.lo], [mu_bar, 1 - mu_bar])
    obd = is_obedient_ambiguous(game, amb, attitude_r)
    s_base = obedient_payoff(game, B, "sender")
    r_base = obedient_payoff(game, B, "receiver")
    s_val = smooth_value(game, amb, None, attitude_s, "sender")
    r_val = smooth_value(game, amb, None, attitude_r, "receiver")
    prem = probability_premium(game, H, L, lam, attitude_s, "sender")
    s_gain, r_gain = s_val - s_base, r_val - r_base
    checks = {
        "em_matches_lam": bool(abs(obd.effective_measure[0] - lam) < 1e-10),
        "receiver_equivalence": (r_gain > tol) == (mu_bar - lam > tol) if abs(r_gain) > tol else None,
        "sender_equivalence": (s_gain > tol) == (prem < mu_bar - lam) if abs(s_gain) > tol else None,
    }
    return ImprovementResult(amb, mu_bar, lam, s_val, r_val, s_gain, r_gain, prem, obd.obedient, obd.effective_measure, err, checks)


# --------------------------------------------------- comparative statics


@dataclass
class StaticsReport:
    base_benefit: bool
    less_averse_senders: dict  # description -> still benefits
    mu: np.ndarray
    mu_tilde: np.ndarray
    transformed_benefit: bool
    transformed_obedient: bool
    same_mu_applicable: bool
    same_mu_obedient: Optional[bool]
    same_mu_benefit: Optional[bool]

    def to_dict(self):
        d = dict(self.__dict__)
        d["mu"] = self.mu.tolist()
        d["mu_tilde"] = self.mu_tilde.tolist()
        return d


def comparative_statics(
    game: Game,
    split: SplitTriple,
    attitude_r: Attitude,
    transform: Attitude,
    attitude_s: Attitude = None,
    less_averse: Iterable[Attitude] = (),
) -> StaticsReport:
    """Robustness of a beneficial binary experiment to more averse receivers and less averse senders.

    ``transform`` is a concave increasing map applied on top of phi_r, giving
    the more averse receiver phi_r~ = transform o phi_r.
    """
    from .ambiguity import Composed

    attitude_s = attitude_s or Linear()
    base = split.base()
    bp = solve_bp(game).value
    res = binary_improvement(game, base, split, attitude_r, attitude_s)
    benefit = res.obedient and res.sender_value > bp + DEFAULT_TOL.payoff
    if not benefit:
        raise DomainError("the binary experiment does not benefit the sender at the given receiver attitude")
    amb = res.ambiguous
    senders = {}
    for att in [Linear(), *less_averse]:
        senders[att.describe()] = bool(smooth_value(game, amb, None, att, "sender") > bp + DEFAULT_TOL.payoff)
    tilde = Composed(transform, attitude_r)
    mu_t = inverse_effective_measure(game, amb, res.em, tilde)
    amb_t = AmbiguousExperiment(amb.experiments, mu_t)
    ob_t = is_obedient_ambiguous(game, amb_t, tilde)
    ben_t = ob_t.obedient and smooth_value(game, amb_t, None, attitude_s, "sender") > bp + DEFAULT_TOL.payoff
    lo_ob = is_obedient(game, split.lo).obedient
    same_ob = same_ben = None
    if lo_ob:
        ob_s = is_obedient_ambiguous(game, amb, tilde)
        same_ob = ob_s.obedient
        same_ben = bool(same_ob and res.sender_value > bp + DEFAULT_TOL.payoff)
    return StaticsReport(True, senders, amb.weights.copy(), mu_t, bool(ben_t), ob_t.obedient, lo_ob, same_ob, same_ben)


# ------------------------------------------------------------ robustness


@dataclass
class BallReport:
    radius: float
    tested: list  # (radius, passed, total)

    def to_dict(self):
        return {"radius": self.radius, "tested": self.tested}


def _perturb_rows(K: np.ndarray, rho: float, rng) -> np.ndarray:
    out = K.copy()
    for w in range(K.shape[0]):
        supp = np.nonzero(K[w] > DEFAULT_TOL.support)[0]
        d = np.zeros(K.shape[1])
        d[supp] = rng.dirichlet(np.ones(supp.size))
        out[w] = (1 - rho) * K[w] + rho * d
    return out


def robustness_ball(
    game: Game,
    ambiguous: AmbiguousExperiment,
    attitude_r: Attitude,
    radius_steps: Sequence[float] = (0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001),
    attitude_s: Attitude = None,
    n: int = 100,
    seed: int = 0,
) -> Optional[BallReport]:
    """Largest tested radius at which all ``n`` perturbed copies stay obedient and beneficial.

    Each kernel row is mixed toward a random distribution on its own support
    and mu is mixed toward a random probability vector, both with weight rho.
    """
    attitude_s = attitude_s or Linear()
    bp = solve_bp(game).value

    def good(amb):
        return is_obedient_ambiguous(game, amb, attitude_r).obedient and smooth_value(game, amb, None, attitude_s, "sender") > bp + DEFAULT_TOL.payoff

    if not good(ambiguous):
        return None
    tested = []
    for rho in sorted(radius_steps, reverse=True):
        rng = np.random.default_rng([seed, int(round(rho * 1e9))])
        ok = 0
        for _ in range(n):
            Ks = [_perturb_rows(e.kernel, rho, rng) for e in ambiguous.experiments]
            mu = (1 - rho) * ambiguous.weights + rho * rng.dirichlet(np.ones(len(Ks)))
            amb = AmbiguousExperiment.from_kernels(game, Ks, mu / mu.sum())
            ok += bool(good(amb))
        tested.append((rho, ok, n))
        if ok == n:
            return BallReport(rho, tested)
    return BallReport(0.0, tested)


# -------------------------------------------------------- envelope order


@dataclass
class EnvelopeReport:
    eps: list
    cost: list
    gain: list
    gain_span: list  # (mu_bar - lam) times the eps-dependent receiver gap, diagnostic
    cost_slope: Optional[float]
    gain_slope: Optional[float]
    gain_span_slope: Optional[float]
    degenerate: bool

    def to_dict(self):
        return dict(self.__dict__)


def _slope(x, y):
    x, y = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(x, y, 1)[0])


def envelope_order_check(
    game: Game,
    base,
    attitude_r: Attitude,
    eps: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
    direction=None,
) -> Optional[EnvelopeReport]:
    """Fit the order in eps of the receiver's ambiguity cost along a symmetric splitting family.

    The family is hi = base + t d, lo = base - t d with d = hat - base for a
    dominating hat on the support, lam = 1/2 and t chosen so the receiver
    payoffs are u_r(base) +/- eps. The cost is the ambiguity-neutral value at
    mu_bar minus the smooth value at mu_bar. The gain term is
    (mu_bar - lam) times the fixed direction gap u_r(hat) - u_r(base).
    """
    B = kernel_of(base)
    split = find_pareto_split(game, B, direction=direction)
    if split is None:
        return None
    Hhat = split.hi.kernel
    D = Hhat - B
    gap = obedient_payoff(game, Hhat, "receiver") - obedient_payoff(game, B, "receiver")
    costs, gains, spans = [], [], []
    for e in eps:
        t = e / gap
        H, L = B + t * D, B - t * D
        if H.min() < -1e-12 or L.min() < -1e-12:
            return None
        rh, rl = obedient_payoff(game, H, "receiver"), obedient_payoff(game, L, "receiver")
        mu = improvement_weight(rh, rl, 0.5, attitude_r)
        neutral = mu * rh + (1 - mu) * rl
        smooth = attitude_r.certainty_equivalent(np.array([rh, rl]), np.array([mu, 1 - mu]))
        costs.append(neutral - smooth)
        gains.append((mu - 0.5) * gap)
        spans.append((mu - 0.5) * (rh - rl))
    eps = list(eps)
    if attitude_r.is_affine or min(costs) <= 0 or min(gains) <= 0:
        return EnvelopeReport(eps, costs, gains, spans, None, None, None, True)
    return EnvelopeReport(eps, costs, gains, spans, _slope(eps, costs), _slope(eps, gains), _slope(eps, spans), False)


# ---------------------------------------------------------------- scanner


def pareto_bracketing_pair(game: Game, ambiguous: AmbiguousExperiment, u_bp: float, tol: float = DEFAULT_TOL.payoff):
    """A pair (i, j) in the support with u_s(i) > u_bp >= u_s(j) and u_r(i) > u_r(j), or None."""
    idx = ambiguous.support()
    s = {i: obedient_payoff(game, ambiguous.experiments[i].kernel, "sender") for i in idx}
    r = {i: obedient_payoff(game, ambiguous.experiments[i].kernel, "receiver") for i in idx}
    for i in idx:
        for j in idx:
            if s[i] > u_bp + tol and s[j] <= u_bp + tol and r[i] > r[j] + tol:
                return int(i), int(j)
    return None
