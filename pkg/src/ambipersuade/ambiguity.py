"""Ambiguity attitudes and smooth-ambiguity evaluation of ambiguous experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .config import DEFAULT_TOL
from .game import (
    DomainError,
    Experiment,
    Game,
    InstanceError,
    ObedienceReport,
    Player,
    _check_prob,
    expected_payoff,
    is_obedient,
    kernel_of,
    obedient_payoff,
)

# ------------------------------------------------------------- attitudes


class Attitude:
    """A strictly increasing, weakly concave phi with analytic derivative and inverse."""

    family = "abstract"
    is_affine = False
    # shape of 1/phi' on the domain: "linear", "concave", "convex" or None if unknown
    inv_deriv_shape: Optional[str] = None

    def value(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def log_deriv(self, x):
        return np.log(self.deriv(x))

    def lower(self) -> float:
        """Payoffs must lie strictly above this bound."""
        return -np.inf

    def check(self, x, what="payoff"):
        x = np.asarray(x, dtype=float)
        bad = ~np.isfinite(x) | (x <= self.lower())
        if np.any(bad):
            v = float(np.ravel(x)[np.argmax(np.ravel(bad))])
            raise DomainError(f"{what} {v!r} is outside the domain of {self.describe()} (needs > {self.lower()!r})")
        return x

    def certainty_equivalent(self, payoffs, weights) -> float:
        """phi^{-1}(sum_k w_k phi(x_k))."""
        x = self.check(payoffs)
        w = np.asarray(weights, dtype=float)
        keep = w > 0
        return float(self.inverse(np.dot(w[keep], self.value(x[keep]))))

    def validate_range(self, lo: float, hi: float, n: int = DEFAULT_TOL.concavity_grid) -> None:
        """Check strict monotonicity and weak concavity on [lo, hi] numerically."""
        self.check(np.array([lo, hi]), what="payoff range end")
        if hi <= lo:
            return
        g = np.linspace(lo, hi, n)
        d = self.deriv(g)
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise DomainError(f"{self.describe()} is not strictly increasing on [{lo}, {hi}]")
        # log-derivative must be non-increasing; robust to huge CARA scales
        ld = self.log_deriv(g)
        if np.any(np.diff(ld) > 1e-9 * np.maximum(1.0, np.abs(ld[1:]))):
            raise DomainError(f"{self.describe()} is not concave on [{lo}, {hi}]")

    def describe(self) -> str:
        return self.family

    def to_dict(self) -> dict:
        return {"family": self.family}

    def __repr__(self) -> str:
        return f"Attitude({self.describe()})"


class Linear(Attitude):
    family = "linear"
    is_affine = True
    inv_deriv_shape = "linear"

    def value(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def deriv(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def inverse(self, y):
        return np.asarray(y, dtype=float) * 1.0

    def log_deriv(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(repr=False)
class ShiftedLog(Attitude):
    """phi(x) = c ln(a x + b) + d with a, c > 0."""

    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    d: float = 0.0
    family = "shifted_log"
    inv_deriv_shape = "linear"

    def __post_init__(self):
        if not (self.a > 0 and self.c > 0):
            raise DomainError(f"shifted_log needs a > 0 and c > 0 (got a={self.a}, c={self.c})")

    def lower(self):
        return -self.b / self.a

    def value(self, x):
        return self.c * np.log(self.a * np.asarray(x, dtype=float) + self.b) + self.d

    def deriv(self, x):
        return self.c * self.a / (self.a * np.asarray(x, dtype=float) + self.b)

    def log_deriv(self, x):
        return np.log(self.c * self.a) - np.log(self.a * np.asarray(x, dtype=float) + self.b)

    def inverse(self, y):
        return (np.exp((np.asarray(y, dtype=float) - self.d) / self.c) - self.b) / self.a

    def certainty_equivalent(self, payoffs, weights):
        x = self.check(payoffs)
        w = np.asarray(weights, dtype=float)
        keep = w > 0
        return float((np.exp(np.dot(w[keep], np.log(self.a * x[keep] + self.b))) - self.b) / self.a)

    def describe(self):
        return f"shifted_log(a={self.a:g}, b={self.b:g}, c={self.c:g}, d={self.d:g})"

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b, "c": self.c, "d": self.d}


@dataclass(repr=False)
class CARA(Attitude):
    """phi(x) = -exp(-alpha x) / alpha with alpha > 0."""

    alpha: float = 1.0
    family = "cara"
    inv_deriv_shape = "convex"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"cara needs alpha > 0 (got {self.alpha})")

    def value(self, x):
        return -np.exp(-self.alpha * np.asarray(x, dtype=float)) / self.alpha

    def deriv(self, x):
        return np.exp(-self.alpha * np.asarray(x, dtype=float))

    def log_deriv(self, x):
        return -self.alpha * np.asarray(x, dtype=float)

    def inverse(self, y):
        return -np.log(-self.alpha * np.asarray(y, dtype=float)) / self.alpha

    def certainty_equivalent(self, payoffs, weights):
        x = self.check(payoffs)
        w = np.asarray(weights, dtype=float)
        keep = w > 0
        z = np.log(w[keep]) - self.alpha * x[keep]
        top = z.max()
        return float(-(top + np.log(np.exp(z - top).sum())) / self.alpha)

    def describe(self):
        return f"cara(alpha={self.alpha:g})"

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha}


@dataclass(repr=False)
class Power(Attitude):
    """phi(x) = (x + shift)^gamma with 0 < gamma <= 1."""

    gamma: float = 0.5
    shift: float = 0.0
    family = "power"

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise DomainError(f"power needs 0 < gamma <= 1 (got {self.gamma})")
        self.is_affine = self.gamma == 1
        self.inv_deriv_shape = "linear" if self.gamma == 1 else "concave"

    def lower(self):
        return -self.shift

    def value(self, x):
        return (np.asarray(x, dtype=float) + self.shift) ** self.gamma

    def deriv(self, x):
        return self.gamma * (np.asarray(x, dtype=float) + self.shift) ** (self.gamma - 1)

    def log_deriv(self, x):
        return np.log(self.gamma) + (self.gamma - 1) * np.log(np.asarray(x, dtype=float) + self.shift)

    def inverse(self, y):
        return np.asarray(y, dtype=float) ** (1.0 / self.gamma) - self.shift

    def describe(self):
        return f"power(gamma={self.gamma:g}, shift={self.shift:g})"

    def to_dict(self):
        return {"family": self.family, "gamma": self.gamma, "shift": self.shift}


class MEULimit(Attitude):
    """Tag for the maxmin limit; evaluation lives in the meu module."""

    family = "meu"

    def _no(self, *_):
        raise DomainError("the maxmin attitude has no phi; use the meu module")

    value = deriv = inverse = log_deriv = _no

    def validate_range(self, lo, hi, n=0):
        self._no()

    def certainty_equivalent(self, payoffs, weights):
        self._no()


@dataclass(repr=False)
class Composed(Attitude):
    """outer(inner(x)); used to make an attitude more ambiguity averse."""

    outer: Attitude = None
    inner: Attitude = None
    family = "composed"

    def lower(self):
        return self.inner.lower()

    def check(self, x, what="payoff"):
        x = self.inner.check(x, what)
        self.outer.check(self.inner.value(x), what=f"inner value of {what}")
        return x

    def value(self, x):
        return self.outer.value(self.inner.value(x))

    def deriv(self, x):
        return self.outer.deriv(self.inner.value(x)) * self.inner.deriv(x)

    def log_deriv(self, x):
        return self.outer.log_deriv(self.inner.value(x)) + self.inner.log_deriv(x)

    def inverse(self, y):
        return self.inner.inverse(self.outer.inverse(y))

    def certainty_equivalent(self, payoffs, weights):
        x = self.check(payoffs)
        w = np.asarray(weights, dtype=float)
        keep = w > 0
        inner_vals = self.inner.value(x[keep])
        return float(self.inner.inverse(self.outer.inverse(np.dot(w[keep], self.outer.value(inner_vals)))))

    def describe(self):
        return f"{self.outer.describe()} o {self.inner.describe()}"

    def to_dict(self):
        return {"family": self.family, "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}


_FAMILIES = {
    "linear": lambda d: Linear(),
    "shifted_log": lambda d: ShiftedLog(float(d.get("a", 1)), float(d.get("b", 0)), float(d.get("c", 1)), float(d.get("d", 0))),
    "log": lambda d: _FAMILIES["shifted_log"](d),
    "cara": lambda d: CARA(float(d["alpha"])),
    "power": lambda d: Power(float(d["gamma"]), float(d.get("shift", 0))),
    "meu": lambda d: MEULimit(),
    "composed": lambda d: Composed(attitude_from_dict(d["outer"]), attitude_from_dict(d["inner"])),
}


def attitude_from_dict(d: dict) -> Attitude:
    fam = d.get("family")
    if fam not in _FAMILIES:
        raise InstanceError(f"unknown attitude family {fam!r}; expected one of {sorted(_FAMILIES)}")
    try:
        return _FAMILIES[fam](d)
    except KeyError as exc:
        raise InstanceError(f"attitude {fam!r} is missing field {exc.args[0]!r}") from None


def parse_attitude(text: str) -> Attitude:
    """Shorthand: ``linear``, ``log:a,b,c,d``, ``cara:alpha``, ``power:gamma,shift``, ``meu``."""
    name, _, rest = text.strip().partition(":")
    name = name.lower()
    try:
        args = [float(t) for t in rest.split(",")] if rest else []
    except ValueError:
        raise InstanceError(f"bad attitude parameters in {text!r}") from None
    if name == "linear" and not args:
        return Linear()
    if name == "meu" and not args:
        return MEULimit()
    if name in ("log", "shifted_log") and 1 <= len(args) <= 4:
        args = args + [1.0, 0.0, 1.0, 0.0][len(args) :]
        return ShiftedLog(*args)
    if name == "cara" and len(args) == 1:
        return CARA(args[0])
    if name == "power" and 1 <= len(args) <= 2:
        return Power(*args)
    raise InstanceError(f"cannot parse attitude {text!r}; use linear, log:a,b,c,d, cara:alpha, power:gamma,shift or meu")


# --------------------------------------------------- ambiguous experiments


@dataclass(frozen=True, eq=False)
class AmbiguousExperiment:
    experiments: tuple
    weights: np.ndarray

    def __post_init__(self):
        exps = tuple(e if isinstance(e, Experiment) else Experiment(e) for e in self.experiments)
        if not exps:
            raise InstanceError("ambiguous experiment needs at least one experiment")
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(exps),):
            raise InstanceError(f"weights has shape {w.shape}, expected ({len(exps)},) along the experiment axis")
        _check_prob(w, "ambiguous weights")
        shape = exps[0].kernel.shape
        for e in exps:
            if e.kernel.shape != shape or e.messages != exps[0].messages:
                raise InstanceError("experiments in an ambiguous experiment must share states and messages")
        w.setflags(write=False)
        object.__setattr__(self, "experiments", exps)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_kernels(cls, game: Game, kernels, weights) -> "AmbiguousExperiment":
        return cls([Experiment(k, game.actions) for k in kernels], weights)

    @property
    def kernels(self) -> np.ndarray:
        return np.stack([e.kernel for e in self.experiments])

    def __len__(self):
        return len(self.experiments)

    def support(self, tol: float = 0.0) -> np.ndarray:
        return np.nonzero(self.weights > tol)[0]

    def restrict(self) -> "AmbiguousExperiment":
        s = self.support()
        w = self.weights[s]
        return AmbiguousExperiment([self.experiments[i] for i in s], w / w.sum())

    def to_dict(self) -> dict:
        return {"experiments": [e.to_dict() for e in self.experiments], "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "AmbiguousExperiment":
        for k in ("experiments", "weights"):
            if k not in d:
                raise InstanceError(f"ambiguous experiment is missing field {k!r}")
        return cls([Experiment.from_dict(e) for e in d["experiments"]], d["weights"])


ExperimentsLike = Union[AmbiguousExperiment, Sequence]


def _kernels(experiments) -> list:
    if isinstance(experiments, AmbiguousExperiment):
        return [e.kernel for e in experiments.experiments]
    return [kernel_of(e) for e in experiments]


def payoff_vector(game: Game, experiments, player: Player, strategy=None) -> np.ndarray:
    """u_i(sigma_theta, tau) for each theta; ``strategy=None`` means obedience."""
    return np.array([expected_payoff(game, K, strategy, player) for K in _kernels(experiments)])


def smooth_value(game: Game, ambiguous: AmbiguousExperiment, strategy, attitude: Attitude, player: Player) -> float:
    """phi^{-1}(sum_theta mu_theta phi(u_i(sigma_theta, tau)))."""
    if isinstance(attitude, MEULimit):
        raise DomainError("smooth_value is undefined for the maxmin attitude; use meu.meu_value")
    u = payoff_vector(game, ambiguous, player, strategy)
    return attitude.certainty_equivalent(u, ambiguous.weights)


def _normalize_logs(logw: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(logw)
    z = logw[mask]
    top = z.max()
    e = np.exp(z - top)
    out[mask] = e / e.sum()
    return out


def _log_derivs(game: Game, kernels, attitude_r: Attitude) -> np.ndarray:
    if isinstance(attitude_r, MEULimit):
        raise DomainError("effective measures need a differentiable phi; use the meu module")
    r = np.array([obedient_payoff(game, K, "receiver") for K in kernels])
    attitude_r.check(r, what="receiver payoff")
    ld = attitude_r.log_deriv(r)
    if not np.all(np.isfinite(ld)):
        bad = r[~np.isfinite(ld)][0]
        raise DomainError(f"phi_r' is not finite at receiver payoff {bad!r}")
    return ld


def effective_measure(game: Game, ambiguous: AmbiguousExperiment, attitude_r: Attitude) -> np.ndarray:
    """em_theta proportional to mu_theta phi_r'(u_r(sigma_theta, tau*))."""
    mu = ambiguous.weights
    ld = _log_derivs(game, _kernels(ambiguous), attitude_r)
    mask = mu > 0
    return _normalize_logs(np.where(mask, np.log(np.where(mask, mu, 1.0)) + ld, -np.inf), mask)


def inverse_effective_measure(game: Game, experiments, target_em, attitude_r: Attitude) -> np.ndarray:
    """The mu whose effective measure is ``target_em``: mu_theta proportional to em_theta / phi_r'."""
    kernels = _kernels(experiments)
    em = np.asarray(target_em, dtype=float)
    if em.shape != (len(kernels),):
        raise InstanceError(f"target effective measure has shape {em.shape}, expected ({len(kernels)},)")
    _check_prob(em, "target effective measure", tol=1e-9)
    ld = _log_derivs(game, kernels, attitude_r)
    mask = em > 0
    return _normalize_logs(np.where(mask, np.log(np.where(mask, em, 1.0)) - ld, -np.inf), mask)


@dataclass
class AmbiguousObedience:
    obedient: bool
    effective: Experiment
    effective_measure: np.ndarray
    report: ObedienceReport

    def __bool__(self):
        return self.obedient


def _require_canonical(game: Game, ambiguous: AmbiguousExperiment):
    if not ambiguous.experiments[0].is_canonical(game):
        raise InstanceError("ambiguous experiment is not canonical; call canonicalize() first")


def effective_experiment(game: Game, ambiguous: AmbiguousExperiment, em: np.ndarray) -> np.ndarray:
    return np.einsum("t,twa->wa", em, ambiguous.kernels)


def is_obedient_ambiguous(
    game: Game, ambiguous: AmbiguousExperiment, attitude_r: Attitude, tol: float = DEFAULT_TOL.obedience
) -> AmbiguousObedience:
    """Obedience of sigma* = sum em_theta sigma_theta."""
    _require_canonical(game, ambiguous)
    em = effective_measure(game, ambiguous, attitude_r)
    K = effective_experiment(game, ambiguous, em)
    K = K / K.sum(axis=1, keepdims=True)
    rep = is_obedient(game, K, tol)
    return AmbiguousObedience(rep.obedient, Experiment(K, game.actions), em, rep)


def probability_premium(game: Game, hi, lo, lam: float, attitude: Attitude, player: Player) -> float:
    """Extra weight on ``hi`` needed to compensate for splitting lam*hi + (1-lam)*lo."""
    if not 0 <= lam <= 1:
        raise DomainError(f"lambda must lie in [0, 1] (got {lam})")
    H, L = kernel_of(hi), kernel_of(lo)
    uh = expected_payoff(game, H, None, player)
    ul = expected_payoff(game, L, None, player)
    if uh - ul <= DEFAULT_TOL.payoff:
        raise DomainError(f"premium needs u(hi) > u(lo); got {uh!r} <= {ul!r}")
    if attitude.is_affine:
        return 0.0
    um = expected_payoff(game, lam * H + (1 - lam) * L, None, player)
    attitude.check(np.array([uh, ul, um]))
    fh, fl, fm = attitude.value(np.array([uh, ul, um]))
    return float((fm - lam * fh - (1 - lam) * fl) / (fh - fl))


def effective_posterior(game: Game, ambiguous: AmbiguousExperiment, attitude_r: Attitude, message) -> np.ndarray:
    """Bayes update of em x p x sigma_theta on ``message``; rows theta, columns states."""
    _require_canonical(game, ambiguous)
    m = game.actions.index(str(message)) if not isinstance(message, (int, np.integer)) else int(message)
    em = effective_measure(game, ambiguous, attitude_r)
    joint = em[:, None] * game.prior[None, :] * ambiguous.kernels[:, :, m]
    tot = joint.sum()
    if tot <= DEFAULT_TOL.support:
        raise DomainError(f"message {game.actions[m]!r} has zero probability under the effective experiment")
    return joint / tot
