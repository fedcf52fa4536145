import numpy as np
import pytest

from ambipersuade.ambiguity import Linear, ShiftedLog
from ambipersuade.game import Game
from ambipersuade.io import load_fixture

PHI_R = ShiftedLog(1.0, 5.0, 1.0, 0.0)  # ln(x + 5)

SIGMA_HI = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])  # full information
SIGMA_LO = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])  # always a1
SIGMA_BP = np.array([[1.0, 0.0, 0.0], [0.25, 0.75, 0.0]])


def random_game(seed, n_states=2, n_actions=3, low=-1.0, high=1.0, integer=False):
    rng = np.random.default_rng(seed)
    if integer:
        S = rng.integers(-3, 4, (n_actions, n_states)).astype(float)
        R = rng.integers(-3, 4, (n_actions, n_states)).astype(float)
    else:
        S = rng.uniform(low, high, (n_actions, n_states))
        R = rng.uniform(low, high, (n_actions, n_states))
    prior = rng.dirichlet(np.full(n_states, 2.0))
    return Game(tuple(f"w{i}" for i in range(n_states)), tuple(f"a{i}" for i in range(n_actions)), prior, S, R)


@pytest.fixture(scope="session")
def intro():
    return load_fixture("intro")


@pytest.fixture(scope="session")
def sa2_first():
    return load_fixture("sa2_first")


@pytest.fixture(scope="session")
def sa2_second():
    return load_fixture("sa2_second")


@pytest.fixture(scope="session")
def phi_r():
    return PHI_R


@pytest.fixture(scope="session")
def phi_s():
    return Linear()


def pytest_terminal_summary(terminalreporter):
    import re

    try:
        from test_acceptance import TITLES
    except ImportError:
        return
    outcome = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m and getattr(rep, "when", "call") in ("call", "setup"):
                n = int(m.group(1))
                if key != "passed" or n not in outcome:
                    outcome[n] = "PASS" if key == "passed" else "FAIL"
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        terminalreporter.write_line(f"{outcome[n]} criterion {n:2d}: {TITLES[n]}")
