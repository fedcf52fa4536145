"""Tolerances and solver settings, kept in one place."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    prob_sum: float = 1e-12  # prior, kernel and weight row sums
    obedience: float = 1e-9  # slack >= -obedience counts as obedient
    lp_pivot: float = 1e-11  # smallest admissible pivot magnitude
    lp_feas: float = 1e-9  # phase-one infeasibility threshold
    lp_cost: float = 1e-10  # reduced cost optimality threshold
    support: float = 1e-12  # entries at or below this are outside the support
    payoff: float = 1e-9  # payoff ties and strict comparisons
    concavity_grid: int = 1000  # points used to check phi on the payoff range


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the sampled concavification and the bisection on u."""

    budget: int = 512  # seeded random kernels in the sample pool
    edge_resolution: int = 40  # points per edge of the experiment polytope
    refine_rounds: int = 4
    refine_radius: float = 0.25
    refine_samples: int = 12  # perturbations per support point per round
    refine_until: float = 1e-3  # refine the pool only while the bracket is wider
    improve_tol: float = 1e-9
    bisect_tol: float = 1e-6
    root_threshold: float = 1e-6
    max_iter: int = 200
    seed: int = 0
    threads: int = 1
    tol: Tolerances = field(default_factory=Tolerances)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        tol = Tolerances(**d.pop("tol", {}))
        return cls(tol=tol, **d)


DEFAULT_TOL = Tolerances()
DEFAULT_CONFIG = SolverConfig()
