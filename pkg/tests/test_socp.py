import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimo_assoc.socp import SOCProgram, SocpStatus, find_feasible, solve_socp

seeds = st.integers(0, 2**32 - 1)


def assert_certificate(sol, tol=1e-6):
    cert = sol.certificate
    assert cert["primal"] <= tol and cert["stationarity"] <= tol
    assert cert["gap"] <= tol * max(1.0, abs(sol.objective))
    assert np.all(cert["multipliers"] >= 0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6))
def test_linear_objective_over_ball(seed, n):
    f = np.random.default_rng(seed).standard_normal(n)
    prog = SOCProgram(np.zeros(n), f)
    prog.add_cone(np.eye(n), np.zeros(n), np.zeros(n), 1.0)
    sol = solve_socp(prog)
    assert sol.status is SocpStatus.OPTIMAL
    assert sol.objective == pytest.approx(-np.linalg.norm(f), rel=1e-7)
    assert_certificate(sol)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6))
def test_min_norm_on_halfspace(seed, n):
    a = np.random.default_rng(seed).standard_normal(n) + 0.1
    prog = SOCProgram(np.ones(n), np.zeros(n))
    prog.add_cone(np.zeros((0, n)), np.zeros(0), a, -1.0)     # a^T x >= 1
    sol = solve_socp(prog)
    assert sol.status is SocpStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.0 / (a @ a), rel=1e-7)
    assert np.allclose(sol.x, a / (a @ a), atol=1e-6 / np.linalg.norm(a))
    assert_certificate(sol)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5), st.floats(0.1, 3.0))
def test_projection_onto_ball(seed, n, r):
    p = np.random.default_rng(seed).standard_normal(n) * 3
    prog = SOCProgram(np.ones(n), -2.0 * p)
    prog.add_cone(np.eye(n), np.zeros(n), np.zeros(n), r)
    sol = solve_socp(prog)
    norm = np.linalg.norm(p)
    expect = p if norm <= r else p * r / norm
    assert sol.status is SocpStatus.OPTIMAL
    assert sol.objective == pytest.approx(expect @ expect - 2 * p @ expect, rel=1e-6, abs=1e-8)
    assert_certificate(sol)


def test_infeasible_cone():
    prog = SOCProgram(np.ones(2), np.zeros(2))
    prog.add_cone(np.eye(2), np.zeros(2), np.zeros(2), -1.0)
    sol = solve_socp(prog)
    assert sol.status is SocpStatus.INFEASIBLE and sol.x is None


def test_disjoint_balls_infeasible():
    prog = SOCProgram(np.zeros(2), np.zeros(2))
    prog.add_cone(np.eye(2), np.array([-3.0, 0.0]), np.zeros(2), 1.0)
    prog.add_cone(np.eye(2), np.array([3.0, 0.0]), np.zeros(2), 1.0)
    status, x, s, _ = find_feasible(prog)
    assert status is SocpStatus.INFEASIBLE and x is None and s > 0


def test_phase_one_point_strictly_feasible():
    prog = SOCProgram(np.zeros(2), np.zeros(2))
    prog.add_cone(np.eye(2), np.array([-1.0, 0.0]), np.zeros(2), 1.2)
    prog.add_cone(np.eye(2), np.array([1.0, 0.0]), np.zeros(2), 1.2)
    status, x, s, _ = find_feasible(prog)
    assert status is SocpStatus.FEASIBLE and s < 0
    assert np.all(prog.margins(x) > 0)


def test_warm_start_accepted():
    prog = SOCProgram(np.zeros(2), np.array([1.0, 1.0]))
    prog.add_cone(np.eye(2), np.zeros(2), np.zeros(2), 1.0)
    sol = solve_socp(prog, x0=np.zeros(2))
    assert sol.objective == pytest.approx(-np.sqrt(2), rel=1e-7)
