"""Optimal ambiguous persuasion by sampled concavification and bisection on u.

For a candidate sender value u, the program Phi*(u) maximizes
sum_k lam_k Phi_u(sigma_k) over probability vectors lam whose mixture
sum_k lam_k sigma_k is obedient. Phi*(u) > 0 exactly when some obedient
ambiguous experiment gives the sender more than u, so the optimum is the
root of a single-crossing function and bisection finds it.

Phi_u is nonlinear in sigma, so the program is solved over a finite pool of
kernels. When phi_s is affine, the extreme points of the hull of Phi_u's
graph sit over vertices and edges of the kernel polytope, which is why the
pool is seeded with every vertex and a fine grid on every edge. Random
kernels and local perturbations around incumbent supports cover the
general case.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .ambiguity import (
    AmbiguousExperiment,
    Attitude,
    MEULimit,
    effective_measure,
    inverse_effective_measure,
    smooth_value,
)
from .bp import BPSolution, solve_bp
from .config import DEFAULT_CONFIG, SolverConfig
from .game import DomainError, Game, kernel_of, obedient_payoff
from .lp import LinearProgram, LPStatus, solve_lp


class SolverError(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


def check_attitudes(game: Game, attitude_s: Attitude, attitude_r: Attitude) -> None:
    for att, U, who in ((attitude_s, game.sender_payoff, "sender"), (attitude_r, game.receiver_payoff, "receiver")):
        if isinstance(att, MEULimit):
            raise DomainError(f"the maxmin attitude for the {who} is handled by the meu module")
        try:
            att.validate_range(float(U.min()), float(U.max()))
        except DomainError as exc:
            raise DomainError(f"{who} attitude: {exc}") from None


def phi_u(game: Game, experiment, u: float, attitude_s: Attitude, attitude_r: Attitude) -> float:
    """(phi_s(u_s(sigma)) - phi_s(u)) / phi_r'(u_r(sigma)) under obedience."""
    K = kernel_of(experiment)
    s = obedient_payoff(game, K, "sender")
    r = obedient_payoff(game, K, "receiver")
    attitude_s.check([s, u])
    attitude_r.check(r, what="receiver payoff")
    d = float(attitude_r.deriv(r))
    if not np.isfinite(d) or d <= 0:
        raise DomainError(f"phi_r' is not positive and finite at receiver payoff {r!r}")
    return float((attitude_s.value(s) - attitude_s.value(u)) / d)


# ------------------------------------------------------------ sample pool


def project_rows(X: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of X (last axis) onto the simplex."""
    shape = X.shape
    Y = X.reshape(-1, shape[-1])
    U = -np.sort(-Y, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, Y.shape[1] + 1)
    cond = U - css / idx > 0
    rho = Y.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(Y.shape[0]), rho] / (rho + 1)
    return np.maximum(Y - theta[:, None], 0.0).reshape(shape)


def vertex_kernels(n_states: int, n_actions: int, supports=None) -> np.ndarray:
    """All deterministic kernels, optionally restricted to per-state action supports."""
    choices = supports if supports is not None else [range(n_actions)] * n_states
    combos = list(itertools.product(*choices))
    K = np.zeros((len(combos), n_states, n_actions))
    for k, c in enumerate(combos):
        K[k, np.arange(n_states), list(c)] = 1.0
    return K


def edge_kernels(n_states: int, n_actions: int, resolution: int) -> np.ndarray:
    """Interior grid points on every edge of the kernel polytope.

    An edge moves mass between two actions in one state while every other
    state is deterministic.
    """
    if resolution < 2 or n_actions < 2:
        return np.zeros((0, n_states, n_actions))
    t = np.arange(1, resolution) / resolution
    blocks = []
    for w in range(n_states):
        others = [x for x in range(n_states) if x != w]
        for base in itertools.product(range(n_actions), repeat=len(others)):
            for a in range(n_actions):
                for b in range(a + 1, n_actions):
                    B = np.zeros((t.size, n_states, n_actions))
                    for x, act in zip(others, base):
                        B[:, x, act] = 1.0
                    B[:, w, a] = t
                    B[:, w, b] = 1.0 - t
                    blocks.append(B)
    return np.concatenate(blocks) if blocks else np.zeros((0, n_states, n_actions))


def random_kernels(n_states: int, n_actions: int, count: int, seed: int) -> np.ndarray:
    """Seeded kernels, generated one at a time so smaller budgets are prefixes."""
    rng = np.random.default_rng(seed)
    out = np.empty((count, n_states, n_actions))
    for k in range(count):
        K = rng.dirichlet(np.ones(n_actions), size=n_states)
        if k % 2 == 1:
            mask = rng.random((n_states, n_actions)) < 0.5
            mask[np.arange(n_states), rng.integers(0, n_actions, n_states)] = True
            K = np.where(mask, K, 0.0)
            K /= K.sum(axis=1, keepdims=True)
        out[k] = K
    return out


class SamplePool:
    """Kernels with cached payoffs, obedience slacks and phi evaluations."""

    def __init__(self, game: Game, attitude_s: Attitude, attitude_r: Attitude, seed: int = 0):
        self.game, self.att_s, self.att_r = game, attitude_s, attitude_r
        nA = game.n_actions
        self.pair_cols = np.array([a * nA + b for a in range(nA) for b in range(nA) if a != b], dtype=np.int64)
        self.kernels = np.zeros((0, game.n_states, nA))
        self.s = np.zeros(0)
        self.r = np.zeros(0)
        self.fs = np.zeros(0)
        self.inv_d = np.zeros(0)
        self.O = np.zeros((0, self.pair_cols.size))
        self._keys: set = set()
        self.rng = np.random.default_rng([seed, 7])

    def __len__(self):
        return self.kernels.shape[0]

    def add(self, K: np.ndarray) -> int:
        K = np.asarray(K, dtype=float)
        if K.size == 0:
            return 0
        K = np.where(K > 1e-14, K, 0.0)
        K = K / K.sum(axis=2, keepdims=True)
        keys = [k.tobytes() for k in np.round(K, 12)]
        keep = []
        for i, key in enumerate(keys):
            if key not in self._keys:
                self._keys.add(key)
                keep.append(i)
        if not keep:
            return 0
        K = np.ascontiguousarray(K[keep])
        g = self.game
        s = _kernels.batch_payoffs(K, g.prior, g.sender_payoff)
        r = _kernels.batch_payoffs(K, g.prior, g.receiver_payoff)
        O = _kernels.batch_obedience(K, g.prior, g.receiver_payoff)[:, self.pair_cols]
        with np.errstate(over="raise"):
            try:
                inv_d = np.exp(-self.att_r.log_deriv(r))
            except FloatingPointError:
                raise DomainError("1/phi_r' overflows on the payoff range; rescale payoffs or soften the attitude") from None
        self.kernels = np.concatenate([self.kernels, K])
        self.s = np.concatenate([self.s, s])
        self.r = np.concatenate([self.r, r])
        self.fs = np.concatenate([self.fs, self.att_s.value(s)])
        self.inv_d = np.concatenate([self.inv_d, inv_d])
        self.O = np.concatenate([self.O, O])
        return len(keep)

    def phi(self, u: float) -> np.ndarray:
        return (self.fs - float(self.att_s.value(u))) * self.inv_d

    def perturb(self, idx: np.ndarray, radius: float, per_point: int) -> np.ndarray:
        """Local moves around the kernels at ``idx``: full-row noise, support noise and edge moves."""
        rng = self.rng
        nW, nA = self.game.n_states, self.game.n_actions
        out = []
        for i in idx:
            K = self.kernels[i]
            for j in range(per_point):
                kind = j % 3
                if kind == 0:
                    P = project_rows(K + radius * rng.standard_normal(K.shape))
                elif kind == 1:
                    supp = K > 0
                    P = project_rows(np.where(supp, K + radius * rng.standard_normal(K.shape), -1.0))
                else:
                    P = K.copy()
                    w = rng.integers(nW)
                    a, b = rng.choice(nA, size=2, replace=False)
                    delta = radius * rng.uniform(-1.0, 1.0)
                    delta = min(max(delta, -P[w, b]), P[w, a])
                    P[w, a] -= delta
                    P[w, b] += delta
                out.append(P)
        return np.array(out)


def build_pool(game: Game, attitude_s: Attitude, attitude_r: Attitude, config: SolverConfig, bp: Optional[BPSolution] = None) -> SamplePool:
    pool = SamplePool(game, attitude_s, attitude_r, config.seed)
    nW, nA = game.n_states, game.n_actions
    pool.add(vertex_kernels(nW, nA))
    n_blocks = nW * (nA * (nA - 1) // 2) * nA ** (nW - 1)
    res = config.edge_resolution
    if n_blocks and n_blocks * (res - 1) > 60000:
        res = max(2, 60000 // n_blocks + 1)
    pool.add(edge_kernels(nW, nA, res))
    if bp is not None:
        pool.add(bp.experiment.kernel[None])
    pool.add(random_kernels(nW, nA, config.budget, config.seed))
    return pool


# --------------------------------------------------------------- Phi*(u)


@dataclass
class PhiStarSolution:
    u: float
    value: float
    weights: np.ndarray
    experiments: np.ndarray  # (k, state, action)
    effective: np.ndarray  # sum_k weights_k experiments_k
    pool_size: int = 0
    rounds: int = 0

    def to_dict(self) -> dict:
        return {
            "u": self.u,
            "value": self.value,
            "weights": self.weights.tolist(),
            "experiments": self.experiments.tolist(),
            "effective": self.effective.tolist(),
            "pool_size": self.pool_size,
        }


def _lp_on_pool(pool: SamplePool, u: float, config: SolverConfig) -> tuple:
    phi = pool.phi(u)
    n = len(pool)
    A = np.vstack([pool.O.T, np.ones((1, n))])
    rel = [">="] * pool.O.shape[1] + ["="]
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    res = solve_lp(LinearProgram(phi, A, rel, b), config.tol)
    if res.status is not LPStatus.OPTIMAL:
        raise SolverError(f"Phi*({u}) program reported {res.status.value}")
    lam = np.where(res.x > 1e-13, res.x, 0.0)
    lam /= lam.sum()
    return float(lam @ phi), lam


def _package(pool: SamplePool, u: float, value: float, lam: np.ndarray, rounds: int) -> PhiStarSolution:
    idx = np.nonzero(lam)[0]
    w = lam[idx]
    K = pool.kernels[idx]
    return PhiStarSolution(u, value, w, K, np.einsum("k,kwa->wa", w, K), len(pool), rounds)


def phi_star_on_pool(pool: SamplePool, u: float, config: SolverConfig, refine: bool = True) -> PhiStarSolution:
    value, lam = _lp_on_pool(pool, u, config)
    rounds = 0
    if refine:
        radius = config.refine_radius
        for _ in range(config.refine_rounds):
            support = np.nonzero(lam)[0]
            if pool.add(pool.perturb(support, radius, config.refine_samples)) == 0:
                break
            new_value, new_lam = _lp_on_pool(pool, u, config)
            rounds += 1
            gain = new_value - value
            value, lam = new_value, new_lam
            radius /= 2
            if gain < config.improve_tol:
                break
    return _package(pool, u, value, lam, rounds)


def solve_phi_star(
    game: Game,
    u: float,
    attitude_s: Attitude,
    attitude_r: Attitude,
    config: SolverConfig = DEFAULT_CONFIG,
    pool: Optional[SamplePool] = None,
) -> PhiStarSolution:
    """Lower bound on Phi*(u) from the sampled program, with local refinement."""
    check_attitudes(game, attitude_s, attitude_r)
    attitude_s.check(u, what="candidate value u")
    if pool is None:
        pool = build_pool(game, attitude_s, attitude_r, config, solve_bp(game, config.tol))
    return phi_star_on_pool(pool, u, config, refine=config.refine_rounds > 0)


# --------------------------------------------------------- reduction step


def caratheodory_reduce(game: Game, kernels: np.ndarray, lam: np.ndarray, u: float, attitude_s: Attitude, attitude_r: Attitude, config: SolverConfig = DEFAULT_CONFIG):
    """Re-weight ``kernels`` keeping sum lam_k sigma_k fixed, as a basic LP solution.

    Maximizes sum lam_k Phi_u(sigma_k). Dropping the last action per state
    leaves |states|*(|actions|-1) coordinates plus the weight sum, so a basic
    solution has at most |states|*(|actions|-1)+1 positive weights.
    """
    kernels = np.asarray(kernels, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n = kernels.shape[0]
    V = kernels[:, :, :-1].reshape(n, -1).T
    A = np.vstack([V, np.ones((1, n))])
    b = np.concatenate([V @ lam, [1.0]])
    phi = np.array([phi_u(game, K, u, attitude_s, attitude_r) for K in kernels])
    res = solve_lp(LinearProgram(phi, A, ["="] * A.shape[0], b), config.tol)
    if not res.ok:
        raise SolverError(f"reduction program reported {res.status.value}")
    new = np.where(res.x > 1e-13, res.x, 0.0)
    new /= new.sum()
    keep = np.nonzero(new)[0]
    return kernels[keep], new[keep]


def support_bound(game: Game) -> int:
    return game.n_states * (game.n_actions - 1) + 1


# ------------------------------------------------------------- top level


@dataclass
class AmbiguousSolution:
    value: float
    ambiguous: AmbiguousExperiment
    effective_measure: np.ndarray
    bp_value: float
    benefit: bool
    trace: list = field(default_factory=list)  # (u, Phi*(u)) pairs in evaluation order
    diagnostics: dict = field(default_factory=dict)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.ambiguous.weights))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "bp_value": self.bp_value,
            "benefit": self.benefit,
            "ambiguous": self.ambiguous.to_dict(),
            "effective_measure": self.effective_measure.tolist(),
            "support_size": self.support_size,
            "trace": [[u, v] for u, v in self.trace],
            "diagnostics": self.diagnostics,
        }


def _sender_value(game, kernels, em, attitude_s, attitude_r):
    mu = inverse_effective_measure(game, list(kernels), em, attitude_r)
    amb = AmbiguousExperiment.from_kernels(game, kernels, mu)
    return smooth_value(game, amb, None, attitude_s, "sender"), amb


def solve_ambiguous(game: Game, attitude_s: Attitude, attitude_r: Attitude, config: SolverConfig = DEFAULT_CONFIG) -> AmbiguousSolution:
    """Bisection on u between u_s^BP and max u_s for the root of Phi*(u)."""
    check_attitudes(game, attitude_s, attitude_r)
    bp = solve_bp(game, config.tol)
    lo, hi = bp.value, float(game.sender_payoff.max())
    pool = build_pool(game, attitude_s, attitude_r, config, bp)
    first = phi_star_on_pool(pool, lo, config, refine=config.refine_rounds > 0)
    trace = [(lo, first.value)]
    if first.value <= config.root_threshold or hi - lo <= config.bisect_tol:
        amb = AmbiguousExperiment([bp.experiment], [1.0])
        return AmbiguousSolution(
            bp.value, amb, np.ones(1), bp.value, False, trace,
            {"bisect_width": 0.0, "root": bp.value, "pool_size": len(pool), "reason": "Phi*(u_bp) within threshold"},
        )

    top = hi
    it = 0
    frozen = False
    while True:
        while hi - lo > config.bisect_tol:
            it += 1
            if it > config.max_iter:
                raise SolverError("bisection did not converge", trace)
            mid = 0.5 * (lo + hi)
            refine = (not frozen) and (hi - lo) > config.refine_until and config.refine_rounds > 0
            v = phi_star_on_pool(pool, mid, config, refine=refine).value
            trace.append((mid, v))
            if v > 0:
                lo = mid
            else:
                hi = mid
            if not frozen and (hi - lo) <= config.refine_until:
                frozen = True
        # the pool only grows, so earlier "below root" verdicts may be stale
        v_hi = phi_star_on_pool(pool, hi, config, refine=False).value
        trace.append((hi, v_hi))
        if v_hi <= 0:
            break
        lo, hi = hi, top

    final = phi_star_on_pool(pool, lo, config, refine=False)
    kernels, lam = final.experiments, final.weights
    value_before, _ = _sender_value(game, kernels, lam, attitude_s, attitude_r)
    n_before = len(lam)
    value = value_before
    for _ in range(5):
        kernels, lam = caratheodory_reduce(game, kernels, lam, value, attitude_s, attitude_r, config)
        new_value, amb = _sender_value(game, kernels, lam, attitude_s, attitude_r)
        change = new_value - value
        value = new_value
        if abs(change) < 1e-12 and len(lam) <= support_bound(game):
            break
    em = effective_measure(game, amb, attitude_r)
    return AmbiguousSolution(
        float(value), amb, em, bp.value, True, trace,
        {
            "bisect_width": hi - lo,
            "root": 0.5 * (lo + hi),
            "bracket": [lo, hi],
            "pool_size": len(pool),
            "support_before_reduction": n_before,
            "value_before_reduction": float(value_before),
            "iterations": it,
        },
    )


@dataclass
class BenefitReport:
    benefit: bool
    margin: float
    bp_value: float
    witness: PhiStarSolution

    def __bool__(self):
        return self.benefit

    def to_dict(self):
        return {"benefit": self.benefit, "margin": self.margin, "bp_value": self.bp_value, "witness": self.witness.to_dict()}


def benefits_from_ambiguity(game: Game, attitude_s: Attitude, attitude_r: Attitude, config: SolverConfig = DEFAULT_CONFIG) -> BenefitReport:
    """Phi*(u_s^BP) > threshold, with Phi*(u_s^BP) as the margin."""
    check_attitudes(game, attitude_s, attitude_r)
    bp = solve_bp(game, config.tol)
    pool = build_pool(game, attitude_s, attitude_r, config, bp)
    sol = phi_star_on_pool(pool, bp.value, config, refine=config.refine_rounds > 0)
    return BenefitReport(bool(sol.value > config.root_threshold), sol.value, bp.value, sol)
