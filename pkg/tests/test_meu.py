import itertools

import numpy as np
import pytest

from ambipersuade.ambiguity import CARA, AmbiguousExperiment, effective_measure
from ambipersuade.bp import solve_bp
from ambipersuade.game import Experiment, Game, ReceiverStrategy, expected_payoff, obedient_payoff
from ambipersuade.meu import best_response_set, meu_obedience, meu_supremum, meu_supremum_strong, outside_option
from ambipersuade.oracles import grid_meu
from ambipersuade.splitting import SplitTriple, binary_improvement

from conftest import SIGMA_BP, SIGMA_HI, SIGMA_LO, random_game

MUS = (0.9, 0.99, 0.999)


@pytest.fixture(scope="module")
def intro_meu(intro):
    return meu_supremum(intro)


@pytest.fixture(scope="module")
def intro_strong(intro):
    return meu_supremum_strong(intro)


# ---------------------------------------------------------- outside option


def test_outside_option_intro(intro):
    assert outside_option(intro) == pytest.approx(0.5)


def test_outside_option_single_action():
    g = Game(("w1", "w2"), ("a",), [0.3, 0.7], [[1, 2]], [[4, -1]])
    assert outside_option(g) == pytest.approx(0.3 * 4 - 0.7)


def test_outside_option_sa2_second(sa2_second):
    assert outside_option(sa2_second) == pytest.approx(1.75)


# --------------------------------------------------------------- obedience


def test_meu_obedience_intro(intro):
    for mu in (0.1, 0.5, 39 / 50, 0.99):
        amb = AmbiguousExperiment.from_kernels(intro, [SIGMA_HI, SIGMA_LO], [mu, 1 - mu])
        ok, K = meu_obedience(intro, amb)
        assert ok
        assert np.array_equal(K, SIGMA_LO)


def test_meu_obedience_equal_payoffs(intro):
    K1 = np.array([[1.0, 0, 0], [1.0, 0, 0]])
    K2 = np.array([[0.5, 0.5, 0], [0.5, 0.5, 0]])  # a2 at the prior also pays the receiver 1/2
    amb = AmbiguousExperiment.from_kernels(intro, [K1, K2], [0.3, 0.7])
    ok, K = meu_obedience(intro, amb)
    assert np.allclose(K, 0.3 * K1 + 0.7 * K2)


def test_meu_obedience_fails_on_bad_minimizer(intro):
    bad = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])  # always a3: worst payoff, not obedient
    amb = AmbiguousExperiment.from_kernels(intro, [SIGMA_HI, bad], [0.5, 0.5])
    assert not meu_obedience(intro, amb)[0]


def _pure_meu_best(game, amb):
    """Best maxmin payoff over pure receiver strategies on recommendations."""
    nA = game.n_actions
    best = -np.inf
    for f in itertools.product(range(nA), repeat=nA):
        T = np.eye(nA)[list(f)]
        v = min(expected_payoff(game, K, ReceiverStrategy(T), "receiver") for K in amb.kernels)
        best = max(best, v)
    return best


@pytest.mark.parametrize("seed", range(8))
def test_meu_obedience_against_pure_enumeration(seed):
    g = random_game(seed, n_actions=3)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        amb = AmbiguousExperiment.from_kernels(g, rng.dirichlet(np.ones(3), size=(2, 2)), rng.dirichlet(np.ones(2)))
        ok, _ = meu_obedience(g, amb)
        if ok:
            obey = min(obedient_payoff(g, K, "receiver") for K in amb.kernels)
            assert obey >= _pure_meu_best(g, amb) - 1e-9


# ---------------------------------------------------------------- supremum


def test_intro_supremum(intro, intro_meu):
    assert intro_meu.supremum == pytest.approx(1.5, abs=1e-9)
    assert not intro_meu.degenerate
    assert obedient_payoff(intro, intro_meu.hi.kernel, "receiver") >= 0.5 - 1e-9
    assert abs(intro_meu.supremum - grid_meu(intro, 0.02).value) < 0.03


def test_aligned_supremum():
    R = np.array([[2.0, 0.0], [0.0, 1.0], [1.2, 0.6]])
    g = Game(("w1", "w2"), ("a", "b", "c"), [0.5, 0.5], R, R)
    assert meu_supremum(g).supremum == pytest.approx(0.5 * 2 + 0.5 * 1, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_supremum_matches_grid(seed):
    g = random_game(700 + seed)
    sol = meu_supremum(g)
    grid = grid_meu(g, 0.02)
    if sol.degenerate:
        assert sol.supremum == pytest.approx(solve_bp(g).value)
    else:
        assert sol.supremum >= grid.value - 1e-9
        assert sol.supremum - grid.value < 0.03


@pytest.mark.parametrize("seed", range(6))
def test_two_action_supremum_at_least_bp(seed):
    g = random_game(800 + seed, n_actions=2)
    assert meu_supremum(g).supremum >= solve_bp(g).value - 1e-9


def test_no_room_above_floor_is_degenerate():
    # the receiver gets the same payoff from every action, so nothing beats the floor strictly
    g = Game(("w1", "w2"), ("a", "b"), [0.5, 0.5], [[1, 0], [0, 2]], [[1, 1], [1, 1]])
    sol = meu_supremum(g)
    assert sol.degenerate
    assert sol.supremum == pytest.approx(solve_bp(g).value)


# ---------------------------------------------------------------- witness


@pytest.mark.parametrize("which", ["intro_meu", "intro_strong"])
def test_witness_family(intro, which, request):
    sol = request.getfixturevalue(which)
    vals = []
    for mu in MUS:
        amb = sol.witness(intro, mu)
        assert meu_obedience(intro, amb, strong=sol.strong)[0]
        vals.append(sol.witness_value(intro, mu))
        rng = np.ptp(intro.sender_payoff)
        assert sol.supremum - vals[-1] < (1 - mu) * rng + 1e-9
    assert vals[0] <= vals[1] <= vals[2] <= sol.supremum + 1e-12
    assert is_lo_obedient(intro, sol)


def is_lo_obedient(game, sol):
    from ambipersuade.game import is_obedient

    return is_obedient(game, sol.lo.kernel).obedient


def test_witness_rejects_endpoints(intro, intro_meu):
    with pytest.raises(ValueError):
        intro_meu.witness(intro, 1.0)


# ------------------------------------------------------------------ strong


def test_a0_intro(intro, intro_strong):
    assert best_response_set(intro) == (0, 1, 2)
    assert intro_strong.A0 == (0, 1, 2)


def test_dominated_action_excluded():
    g = Game(("w1", "w2"), ("a", "b", "d"), [0.5, 0.5], [[1, 0], [0, 1], [5, 5]], [[1, 0], [0, 1], [-1, -1]])
    assert 2 not in best_response_set(g)
    sol = meu_supremum_strong(g)
    assert np.all(sol.hi.kernel[:, 2] == 0)


@pytest.mark.parametrize("seed", range(6))
def test_strong_at_most_weak(seed):
    g = random_game(900 + seed)
    assert meu_supremum_strong(g).supremum <= meu_supremum(g).supremum + 1e-9


# ---------------------------------------------------------- smooth limit


def test_cara_mass_leaves_non_minimizers(intro):
    amb = AmbiguousExperiment.from_kernels(intro, [SIGMA_HI, SIGMA_LO], [39 / 50, 11 / 50])
    off = [effective_measure(intro, amb, CARA(a))[0] for a in (1.0, 10.0, 100.0)]
    assert off[0] > off[1] > off[2]
    assert off[2] < 1e-40


def test_receiver_payoff_drops_in_the_limit(intro, intro_meu):
    # maxmin receiver at the witness gets the floor, smooth receivers keep a strict gain over BP
    bp_receiver = obedient_payoff(intro, SIGMA_BP, "receiver")
    assert bp_receiver == pytest.approx(1.25)
    amb = intro_meu.witness(intro, 0.999)
    assert min(obedient_payoff(intro, K, "receiver") for K in amb.kernels) <= bp_receiver
    split = SplitTriple(Experiment(SIGMA_HI, intro.actions), Experiment(SIGMA_LO, intro.actions), 0.75)
    for a in (1.0, 10.0, 100.0):
        assert binary_improvement(intro, SIGMA_BP, split, CARA(a)).receiver_value > bp_receiver
