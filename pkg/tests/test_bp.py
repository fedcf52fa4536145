import numpy as np
import pytest

from ambipersuade.bp import indirect_utility_curve, solve_bp, upper_hull
from ambipersuade.game import DomainError, Game, obedient_payoff
from ambipersuade.oracles import grid_bp

from conftest import SIGMA_BP, random_game


def test_intro_bp(intro):
    sol = solve_bp(intro)
    assert sol.value == pytest.approx(1.25, abs=1e-9)
    assert np.allclose(sol.experiment.kernel, SIGMA_BP, atol=1e-7)
    assert sol.obedience.obedient


def test_sa2_first_bp(sa2_first):
    sol = solve_bp(sa2_first)
    assert sol.value == pytest.approx(2.0, abs=1e-9)
    # the maximizer is not unique; the known witness attains the same value
    sigma_a = np.array([[0.8, 0.2, 0, 0, 0], [0.4, 0.6, 0, 0, 0]])
    assert obedient_payoff(sa2_first, sigma_a, "sender") == pytest.approx(2.0, abs=1e-12)
    assert obedient_payoff(sa2_first, sigma_a, "receiver") == pytest.approx(2.0, abs=1e-12)


def test_aligned_interests_full_information():
    rng = np.random.default_rng(4)
    for _ in range(10):
        R = rng.uniform(-1, 1, (3, 3))
        p = rng.dirichlet(np.ones(3))
        g = Game(("w1", "w2", "w3"), ("a", "b", "c"), p, R, R)
        assert solve_bp(g).value == pytest.approx(p @ R.max(axis=0), abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_bp_matches_grid(seed):
    g = random_game(500 + seed)
    v = solve_bp(g).value
    grid = grid_bp(g, step=0.1)
    # grid slack: lattice step times the largest sender payoff magnitude
    slack = 0.1 * np.abs(g.sender_payoff).max()
    assert v >= grid.value - 1e-9
    assert v - grid.value <= slack


@pytest.mark.parametrize("seed", range(10))
def test_value_matches_kernel(seed):
    g = random_game(seed, n_states=3, n_actions=4)
    sol = solve_bp(g)
    assert sol.value == pytest.approx(obedient_payoff(g, sol.experiment.kernel, "sender"), abs=1e-9)
    assert sol.obedience.obedient


# ------------------------------------------------------------------ curve


def test_curve_intro(intro):
    tab = indirect_utility_curve(intro, 200)
    iu = dict(zip(tab.belief.round(12), tab.iu))
    assert iu[0.5] == pytest.approx(0.5)
    assert iu[1.0] == pytest.approx(2.0)
    assert tab.cav_at(0.5) == pytest.approx(1.25, abs=1e-12)


def test_curve_kinks_included(intro):
    tab = indirect_utility_curve(intro, 7)
    # receiver indifference: a1/a3 at Pr(w2) = 1/5, a2/a3 at 1/3, a1/a2 at 1/2
    for q in (0.2, 1 / 3, 0.5):
        assert np.any(np.isclose(tab.belief, q, atol=1e-12))


def test_curve_envelope_dominates(intro):
    tab = indirect_utility_curve(intro, 100)
    assert np.all(tab.cav_iu >= tab.iu - 1e-12)
    d = np.diff(tab.cav_iu) / np.diff(tab.belief)
    assert np.all(np.diff(d) <= 1e-9)


def test_curve_csv(intro):
    text = indirect_utility_curve(intro, 4).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "belief,iu,cav_iu"
    assert len(lines) > 5


def test_curve_needs_two_states():
    g = random_game(0, n_states=3)
    with pytest.raises(DomainError):
        indirect_utility_curve(g)


def test_upper_hull_square():
    x = np.array([0.0, 0.5, 1.0])
    assert list(upper_hull(x, np.array([0.0, 1.0, 0.0]))) == [0, 1, 2]
    assert list(upper_hull(x, np.array([0.0, -1.0, 0.0]))) == [0, 2]
