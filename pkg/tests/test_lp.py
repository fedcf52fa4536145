import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ambipersuade.game import obedience_rows, payoff_row, row_sum_rows
from ambipersuade.lp import LinearProgram, LPStatus, solve_lp
from ambipersuade.oracles import vertex_enumeration


def test_single_variable_max():
    res = solve_lp(LinearProgram([1.0], [[1.0]], "<=", [3.0]))
    assert res.ok
    assert res.value == pytest.approx(3.0, abs=1e-12)


def test_infeasible():
    res = solve_lp(LinearProgram([1.0], [[1.0]], "<=", [-1.0]))
    assert res.status is LPStatus.INFEASIBLE


def test_unbounded():
    res = solve_lp(LinearProgram([1.0, 0.0], [[0.0, 1.0]], "<=", [1.0]))
    assert res.status is LPStatus.UNBOUNDED


def test_free_and_bounded_variables():
    # min x + y with x free, -2 <= y <= 5, x + y >= -1, x - y <= 0
    lp = LinearProgram([1.0, 1.0], [[1.0, 1.0], [1.0, -1.0]], [">=", "<="], [-1.0, 0.0], bounds=[(-np.inf, np.inf), (-2.0, 5.0)], maximize=False)
    res = solve_lp(lp)
    assert res.ok
    assert res.value == pytest.approx(-1.0, abs=1e-10)


def test_malformed_program():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], [[1.0, 1.0]], "<=", [1.0, 2.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[np.inf]], "<=", [1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], "<>", [1.0])


def test_intro_bp_program(intro):
    G, _ = obedience_rows(intro)
    E = row_sum_rows(intro)
    lp = LinearProgram(payoff_row(intro, "sender"), np.vstack([G, E]), [">="] * len(G) + ["="] * 2, np.r_[np.zeros(len(G)), np.ones(2)])
    res = solve_lp(lp)
    assert res.value == pytest.approx(1.25, abs=1e-12)


def test_deterministic(intro):
    rng = np.random.default_rng(1)
    A, b, c = rng.uniform(0, 1, (20, 30)), rng.uniform(1, 2, 20), rng.uniform(-1, 1, 30)
    r1 = solve_lp(LinearProgram(c, A, "<=", b))
    r2 = solve_lp(LinearProgram(c, A, "<=", b))
    assert np.array_equal(r1.x, r2.x)
    assert r1.iterations == r2.iterations


def _random_equality_lp(rng, m, n):
    # feasible by construction and bounded by a budget row with a slack column
    A = rng.uniform(-1, 1, (m, n))
    x0 = rng.uniform(0, 1, n)
    A = np.vstack([A, np.ones(n)])
    A = np.hstack([A, np.r_[np.zeros(m), 1.0][:, None]])
    b = A[:, :n] @ x0
    b[-1] = x0.sum() + 1.0
    c = np.r_[rng.uniform(-1, 1, n), 0.0]
    return c, A, b


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(2, 7))
def test_matches_vertex_enumeration(seed, m, n):
    rng = np.random.default_rng(seed)
    c, A, b = _random_equality_lp(rng, min(m, n - 1), n)
    oracle = vertex_enumeration(c, A, b)
    res = solve_lp(LinearProgram(c, A, "=", b))
    assert oracle is not None and res.ok
    assert abs(res.value - oracle[0]) < 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(5, 50), st.integers(5, 50))
def test_duality_gap(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-0.5, 1, (m, n))
    A[0] = np.abs(A[0]) + 0.1  # keeps the program bounded
    b = rng.uniform(0.5, 2, m)
    c = rng.uniform(-1, 1, n)
    res = solve_lp(LinearProgram(c, A, "<=", b))
    assert res.ok
    y = res.duals
    assert np.max(A @ res.x - b) < 1e-8 and res.x.min() > -1e-8
    assert y.min() > -1e-8
    assert np.min(A.T @ y - c) > -1e-8
    assert abs(b @ y - res.value) < 1e-7
