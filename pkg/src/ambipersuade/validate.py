"""Necessary conditions for an optimal ambiguous experiment, with repairs.

A violation means the candidate can be improved. Where the improving move
is constructive (merging a badly ranked pair, or splitting one experiment
into a Pareto-ranked pair) the improved candidate is returned with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .ambiguity import (
    AmbiguousExperiment,
    Attitude,
    ShiftedLog,
    effective_measure,
    inverse_effective_measure,
    smooth_value,
)
from .game import Game, obedient_payoff
from .solver import AmbiguousSolution, phi_u
from .splitting import find_pareto_split

PAIR_TOL = 1e-7


@dataclass
class Violation:
    check: str  # "i", "ii", "iii" or "iv"
    kind: str  # "pair" or "split"
    members: tuple  # support indices involved
    detail: str
    improved: Optional[AmbiguousExperiment] = None
    improved_value: Optional[float] = None

    def to_dict(self):
        d = {"check": self.check, "kind": self.kind, "members": list(self.members), "detail": self.detail}
        if self.improved is not None:
            d["improved"] = self.improved.to_dict()
            d["improved_value"] = self.improved_value
        return d


@dataclass
class ValidationReport:
    value: float
    violations: list = field(default_factory=list)
    checks_run: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"value": self.value, "clean": self.clean, "checks_run": self.checks_run, "violations": [v.to_dict() for v in self.violations]}


def _value_from_em(game, kernels, em, attitude_s, attitude_r):
    keep = em > 1e-15
    kernels = [k for k, z in zip(kernels, keep) if z]
    em = em[keep] / em[keep].sum()
    mu = inverse_effective_measure(game, kernels, em, attitude_r)
    amb = AmbiguousExperiment.from_kernels(game, kernels, mu)
    return amb, smooth_value(game, amb, None, attitude_s, "sender")


def merge_improvement(game, kernels, em, i, j, u, attitude_s, attitude_r, grid: int = 199):
    """Replace one of a pair by lam*K_i + (1-lam)*K_j if that raises sum em Phi_u."""
    Ki, Kj = kernels[i], kernels[j]
    fi, fj = phi_u(game, Ki, u, attitude_s, attitude_r), phi_u(game, Kj, u, attitude_s, attitude_r)
    best, best_lam = 0.0, None
    for lam in np.arange(1, grid + 1) / (grid + 1):
        gain = phi_u(game, lam * Ki + (1 - lam) * Kj, u, attitude_s, attitude_r) - (lam * fi + (1 - lam) * fj)
        if gain > best:
            best, best_lam = gain, lam
    if best_lam is None or best <= 1e-12:
        return None
    lam = best_lam
    M = lam * Ki + (1 - lam) * Kj
    ks, w = [k.copy() for k in kernels], em.astype(float).copy()
    if w[i] / lam <= w[j] / (1 - lam):
        ks[i], w[i], w[j] = M, w[i] / lam, w[j] - (1 - lam) * w[i] / lam
    else:
        ks[j], w[j], w[i] = M, w[j] / (1 - lam), w[i] - lam * w[j] / (1 - lam)
    return _value_from_em(game, ks, np.maximum(w, 0.0), attitude_s, attitude_r)


def split_improvement(game, kernels, em, i, split, u, attitude_s, attitude_r):
    """Replace K_i by its split (hi with weight lam*em_i, lo with (1-lam)*em_i) if that raises sum em Phi_u."""
    H, L, lam = split.hi.kernel, split.lo.kernel, split.lam
    gain = lam * phi_u(game, H, u, attitude_s, attitude_r) + (1 - lam) * phi_u(game, L, u, attitude_s, attitude_r) - phi_u(game, kernels[i], u, attitude_s, attitude_r)
    if gain <= 1e-12:
        return None
    ks = [k for t, k in enumerate(kernels) if t != i] + [H, L]
    w = np.concatenate([np.delete(em, i), [lam * em[i], (1 - lam) * em[i]]])
    return _value_from_em(game, ks, w, attitude_s, attitude_r)


def validate_optimality(
    game: Game,
    solution: Union[AmbiguousSolution, AmbiguousExperiment],
    attitude_s: Attitude,
    attitude_r: Attitude,
    budget: int = 200,
    seed: int = 0,
) -> ValidationReport:
    """Check the ranking and splitting conditions any optimal candidate satisfies."""
    amb = solution.ambiguous if isinstance(solution, AmbiguousSolution) else solution
    amb = amb.restrict()
    U = smooth_value(game, amb, None, attitude_s, "sender")
    rep = ValidationReport(U)
    n = len(amb)
    if n < 2:
        rep.checks_run.append("singleton support: nothing to check")
        return rep
    kernels = [e.kernel for e in amb.experiments]
    em = effective_measure(game, amb, attitude_r)
    s = np.array([obedient_payoff(game, K, "sender") for K in kernels])
    r = np.array([obedient_payoff(game, K, "receiver") for K in kernels])
    ld = attitude_r.log_deriv(r)
    plus = s > U + PAIR_TOL
    strict_r = not attitude_r.is_affine
    affine_s = attitude_s.is_affine
    shape = attitude_r.inv_deriv_shape
    flagged = set()

    def weakly_ranked(i, j):
        return (s[i] - s[j]) * (r[i] - r[j]) >= -PAIR_TOL

    def flag_pair(check, i, j, why):
        key = (check, "pair", min(i, j), max(i, j))
        if key in flagged:
            return
        flagged.add(key)
        imp = merge_improvement(game, kernels, em, i, j, U, attitude_s, attitude_r)
        v = Violation(check, "pair", (int(i), int(j)), why)
        if imp is not None:
            v.improved, v.improved_value = imp
        rep.violations.append(v)

    def scan_splits(check, side_hi, side_lo, extra=None):
        for i in range(n):

            def accept(H, L, lam):
                sh, sl = obedient_payoff(game, H, "sender"), obedient_payoff(game, L, "sender")
                rh, rl = obedient_payoff(game, H, "receiver"), obedient_payoff(game, L, "receiver")
                if side_hi is not None and (sh > U + PAIR_TOL) != side_hi:
                    return False
                if side_lo is not None and (sl > U + PAIR_TOL) != side_lo:
                    return False
                if not attitude_r.log_deriv(rh) < attitude_r.log_deriv(rl):
                    return False
                return extra is None or extra(sh, sl, rh, rl)

            split = find_pareto_split(game, kernels[i], budget=budget, seed=seed, accept=accept)
            if split is None:
                continue
            v = Violation(check, "split", (int(i),), f"experiment {i} admits a Pareto-ranked splitting with weight {split.lam:.6g}")
            imp = split_improvement(game, kernels, em, i, split, U, attitude_s, attitude_r)
            if imp is not None:
                v.improved, v.improved_value = imp
            rep.violations.append(v)

    # (i) bracketing pairs must be weakly Pareto-ranked
    if strict_r:
        rep.checks_run.append("i")
        for i in np.nonzero(plus)[0]:
            for j in np.nonzero(~plus)[0]:
                if abs(ld[i] - ld[j]) > 1e-12 and not weakly_ranked(i, j):
                    flag_pair("i", i, j, f"pair ({i}, {j}) brackets U_s but is inversely ranked")
    # (ii) affine phi_s: no bracketing Pareto-ranked splitting
    if affine_s and strict_r:
        rep.checks_run.append("ii")
        scan_splits("ii", True, False)
    # (iii) same-side conditions from the shape of 1/phi_r'
    if strict_r and shape in ("linear", "concave", "convex"):
        rep.checks_run.append("iii")
        sides = []
        if shape in ("linear", "concave"):
            sides.append(True)
        if shape in ("linear", "convex"):
            sides.append(False)
        for side in sides:
            idx = np.nonzero(plus == side)[0]
            for a in idx:
                for b in idx:
                    if a < b and abs(s[a] - s[b]) > PAIR_TOL and abs(ld[a] - ld[b]) > 1e-12 and not weakly_ranked(a, b):
                        flag_pair("iii", a, b, f"same-side pair ({a}, {b}) is inversely ranked")

            def ratio_ok(sh, sl, rh, rl):
                return attitude_s.log_deriv(sh) - attitude_s.log_deriv(sl) > attitude_r.log_deriv(rh) - attitude_r.log_deriv(rl)

            # concave 1/phi' rules out splits inside Sigma-, convex inside Sigma+
            split_side = (not side)
            scan_splits("iii", split_side, split_side, ratio_ok)
    # (iv) shifted-log receiver and affine sender: every pair ranked, no splitting at all
    if isinstance(attitude_r, ShiftedLog) and affine_s:
        rep.checks_run.append("iv")
        for a in range(n):
            for b in range(a + 1, n):
                if not weakly_ranked(a, b):
                    flag_pair("iv", a, b, f"pair ({a}, {b}) is not weakly Pareto-ranked")
        scan_splits("iv", None, None)
    return rep
