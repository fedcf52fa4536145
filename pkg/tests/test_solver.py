import numpy as np
import pytest

from ambipersuade.ambiguity import CARA, AmbiguousExperiment, Linear, inverse_effective_measure, is_obedient_ambiguous, smooth_value
from ambipersuade.bp import solve_bp
from ambipersuade.config import DEFAULT_CONFIG
from ambipersuade.game import DomainError, Experiment, obedient_payoff
from ambipersuade.solver import (
    benefits_from_ambiguity,
    build_pool,
    caratheodory_reduce,
    phi_star_on_pool,
    phi_u,
    random_kernels,
    solve_ambiguous,
    solve_phi_star,
    support_bound,
)
from ambipersuade.splitting import binary_improvement, find_pareto_split, pareto_bracketing_pair

from conftest import PHI_R, SIGMA_BP, SIGMA_HI, SIGMA_LO, random_game

LIN = Linear()


@pytest.fixture(scope="module")
def intro_solution(intro):
    return solve_ambiguous(intro, LIN, PHI_R)


# ------------------------------------------------------------------- Phi_u


def test_phi_u_zero_at_own_value(intro):
    assert phi_u(intro, SIGMA_BP, 1.25, LIN, PHI_R) == pytest.approx(0.0, abs=1e-15)


def test_phi_u_intro_values(intro):
    assert phi_u(intro, SIGMA_HI, 1.25, LIN, PHI_R) == pytest.approx(13 / 8, abs=1e-12)
    assert phi_u(intro, SIGMA_LO, 1.25, LIN, PHI_R) == pytest.approx(-33 / 8, abs=1e-12)


def test_phi_u_accepts_experiment(intro):
    assert phi_u(intro, Experiment(SIGMA_HI, intro.actions), 1.0, LIN, PHI_R) == pytest.approx(0.5 * 6.5)


# ------------------------------------------------------------------- Phi*


def test_phi_star_intro_positive(intro):
    sol = solve_phi_star(intro, 1.25, LIN, PHI_R)
    # the known splitting alone gives 3/4 * 13/8 - 1/4 * 33/8 = 6/32
    assert sol.value >= 6 / 32 - 1e-9
    assert np.isclose(sol.weights.sum(), 1.0)


def test_phi_star_negative_above_max(intro):
    u = float(intro.sender_payoff.max()) + 0.1
    assert solve_phi_star(intro, u, LIN, PHI_R).value < 0


@pytest.mark.parametrize("seed", range(5))
def test_phi_star_two_actions(seed):
    g = random_game(seed, n_actions=2)
    bp = solve_bp(g).value
    assert solve_phi_star(g, bp, LIN, PHI_R).value <= 1e-6


def test_phi_star_monotone_in_budget(intro):
    values = []
    for budget in (16, 64, 256):
        cfg = DEFAULT_CONFIG.with_(budget=budget)
        pool = build_pool(intro, LIN, CARA(2.0), cfg)
        values.append(phi_star_on_pool(pool, 1.3, cfg, refine=False).value)
    assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12


def test_random_kernels_are_prefixes():
    a = random_kernels(2, 3, 10, 5)
    b = random_kernels(2, 3, 30, 5)
    assert np.array_equal(a, b[:10])


# ---------------------------------------------------------- solve_ambiguous


def test_intro_optimum(intro, intro_solution):
    sol = intro_solution
    assert sol.value == pytest.approx(1.28, abs=1e-4)
    assert sol.benefit
    K = sol.ambiguous.kernels
    hi = int(np.argmax([obedient_payoff(intro, k, "sender") for k in K]))
    assert np.allclose(K[hi], SIGMA_HI, atol=1e-6)
    assert sol.ambiguous.weights[hi] == pytest.approx(39 / 50, abs=1e-4)
    assert sol.effective_measure[hi] == pytest.approx(0.75, abs=1e-4)


def test_solution_consistency(intro, intro_solution):
    sol = intro_solution
    assert is_obedient_ambiguous(intro, sol.ambiguous, PHI_R).obedient
    assert smooth_value(intro, sol.ambiguous, None, LIN, "sender") == pytest.approx(sol.value, abs=1e-12)
    assert abs(sol.value - sol.diagnostics["root"]) <= 2 * DEFAULT_CONFIG.bisect_tol
    assert sol.diagnostics["bisect_width"] < 1e-6


def test_single_crossing_at_root(intro, intro_solution):
    root = intro_solution.diagnostics["root"]
    assert solve_phi_star(intro, root - 1e-3, LIN, PHI_R).value > 0
    assert solve_phi_star(intro, root + 1e-3, LIN, PHI_R).value < 0


def test_neutral_receiver_gets_bp(intro):
    sol = solve_ambiguous(intro, LIN, LIN)
    assert sol.value == pytest.approx(1.25, abs=1e-9)
    assert not sol.benefit


def test_sa2_lower_bound(sa2_first):
    sol = solve_ambiguous(sa2_first, LIN, PHI_R)
    assert sol.value >= 159 / 70 - 1e-6
    assert sol.support_size <= support_bound(sa2_first)


def test_support_bound_and_reduction(intro, intro_solution):
    d = intro_solution.diagnostics
    assert intro_solution.support_size <= support_bound(intro)
    assert abs(intro_solution.value - d["value_before_reduction"]) < 1e-8


def test_caratheodory_keeps_effective_experiment(intro):
    rng = np.random.default_rng(2)
    K = rng.dirichlet(np.ones(3), size=(12, 2))
    lam = rng.dirichlet(np.ones(12))
    K2, lam2 = caratheodory_reduce(intro, K, lam, 1.0, LIN, PHI_R)
    assert len(lam2) <= support_bound(intro)
    assert np.allclose(np.einsum("k,kwa->wa", lam, K), np.einsum("k,kwa->wa", lam2, K2), atol=1e-10)
    before = sum(l * phi_u(intro, k, 1.0, LIN, PHI_R) for l, k in zip(lam, K))
    after = sum(l * phi_u(intro, k, 1.0, LIN, PHI_R) for l, k in zip(lam2, K2))
    assert after >= before - 1e-10


def test_necessity_scanner_on_outputs(intro, sa2_first, intro_solution):
    for g, sol in ((intro, intro_solution), (sa2_first, solve_ambiguous(sa2_first, LIN, PHI_R))):
        assert sol.benefit
        assert pareto_bracketing_pair(g, sol.ambiguous, sol.bp_value) is not None


def test_dominates_binary_improvement(intro, intro_solution):
    sp = find_pareto_split(intro, SIGMA_BP)
    res = binary_improvement(intro, SIGMA_BP, sp, PHI_R)
    assert intro_solution.value >= res.sender_value - 1e-6


def test_solver_rejects_bad_domain(intro):
    with pytest.raises(DomainError):
        solve_ambiguous(intro, LIN, PHI_R.__class__(1.0, 1.0))


# ------------------------------------------------------------ benefit test


def test_benefit_intro(intro):
    rep = benefits_from_ambiguity(intro, LIN, PHI_R)
    assert rep.benefit and rep.margin > 0


def test_no_benefit_linear(intro):
    assert not benefits_from_ambiguity(intro, LIN, LIN).benefit


@pytest.mark.parametrize("seed", range(5))
def test_no_benefit_two_actions(seed):
    g = random_game(100 + seed, n_states=2 + seed % 2, n_actions=2)
    assert not benefits_from_ambiguity(g, LIN, CARA(2.0)).benefit


def test_inverse_measure_of_solution(intro, intro_solution):
    mu = inverse_effective_measure(intro, intro_solution.ambiguous, intro_solution.effective_measure, PHI_R)
    assert mu == pytest.approx(intro_solution.ambiguous.weights, abs=1e-10)
    assert isinstance(intro_solution.ambiguous, AmbiguousExperiment)
