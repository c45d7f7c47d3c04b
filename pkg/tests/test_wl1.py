import numpy as np
import pytest
from hypothesis import given, strategies as st

from recsparse.wl1 import (SolverConfig, WeightedL1Problem, bp_enumeration_oracle, factorize, kkt_certificate,
                           solve_modcs, solve_noisy_l1)


def _instance(seed, n, m, k, t_size):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m))
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(m)
    supp = rng.choice(m, k, replace=False)
    x[supp] = rng.choice([-1, 1], k) * rng.uniform(0.5, 2.0, k)
    T = rng.choice(m, t_size, replace=False)
    return A, x, T


def test_exact_recovery_with_known_support():
    A, x, _ = _instance(0, 20, 40, 5, 0)
    T = np.flatnonzero(x)
    res = solve_modcs(WeightedL1Problem(A, A @ x, 0.0, T))
    assert res.converged
    assert np.allclose(res.beta, x, atol=1e-6)
    assert res.objective == pytest.approx(0.0, abs=1e-8)


def test_zero_measurements_give_zero():
    A, _, _ = _instance(1, 6, 10, 1, 0)
    res = solve_noisy_l1(A, np.zeros(6), 0.1)
    assert np.all(res.beta == 0)


def test_small_y_inside_ball_gives_zero():
    A, _, _ = _instance(2, 6, 10, 1, 0)
    y = np.full(6, 0.01)
    res = solve_noisy_l1(A, y, 1.0)
    assert np.all(res.beta == 0)


def test_problem_validation():
    with pytest.raises(ValueError):
        WeightedL1Problem(np.eye(3), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        WeightedL1Problem(np.eye(3), np.zeros(3), -1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)


@given(st.integers(0, 10**6), st.integers(3, 7), st.integers(0, 3))
def test_matches_enumeration_oracle(seed, n, t_size):
    m = n + 3
    A, x, T = _instance(seed, n, m, min(2, n - 1), min(t_size, n - 1))
    y = A @ x
    prob = WeightedL1Problem(A, y, 0.0, T)
    res = solve_modcs(prob)
    _, obj = bp_enumeration_oracle(A, y, T)
    assert abs(res.objective - obj) <= 1e-5 * max(1.0, obj)
    assert kkt_certificate(prob, res.beta).passed


@given(st.integers(0, 10**6), st.floats(0.01, 0.5))
def test_noisy_solution_feasible_and_certified(seed, rel):
    A, x, T = _instance(seed, 15, 30, 4, 2)
    y = A @ x
    eps = rel * np.linalg.norm(y)
    prob = WeightedL1Problem(A, y, eps, T)
    res = solve_modcs(prob, factor=factorize(A))
    assert np.linalg.norm(y - A @ res.beta) <= eps * (1 + 1e-6) + 1e-9
    assert kkt_certificate(prob, res.beta).passed


def test_certificate_rejects_suboptimal_points():
    A, x, _ = _instance(3, 10, 20, 2, 0)
    y = A @ x
    prob = WeightedL1Problem(A, y, 0.0)
    # least-norm solution is feasible but (generically) not l1-optimal
    ln = np.linalg.pinv(A) @ y
    assert not kkt_certificate(prob, ln).passed
    assert not kkt_certificate(prob, np.zeros(20)).passed
    assert kkt_certificate(prob, solve_modcs(prob).beta).passed


def test_known_support_entries_are_free():
    # entries on T carry no cost: putting the whole signal on T gives objective 0
    A, x, _ = _instance(4, 8, 12, 3, 0)
    T = np.flatnonzero(x)
    _, obj = bp_enumeration_oracle(A, A @ x, T)
    assert obj == pytest.approx(0.0, abs=1e-9)
