import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimo_assoc.bounds import SINRTargets, sinr_mrt, sinr_zf
from mimo_assoc.config import NetworkConfig
from mimo_assoc.lp import LpStatus
from mimo_assoc.network import NetworkRealization, generate_network
from mimo_assoc.powermin import (PowerMinInstance, association_rule_check, build_powermin_lp,
                                 extract_association, max_snr_baseline, powermin_kkt, solve_instance,
                                 solve_powermin)

from conftest import SIGMA2, random_realization, single_link


def example_instance(xi_hat=3.0, M=100):
    """The single-link worked example with its rounded theta."""
    real = single_link(M=M)
    real = dataclasses.replace(real, theta=np.array([[9.876e-11]]))
    targets = SINRTargets(np.array([np.nan]), np.array([xi_hat]))
    return real, PowerMinInstance.from_realization(real, targets, "mrt", noise=SIGMA2)


def check_targets_met(real, res, scheme, xi_hat):
    fn = sinr_mrt if scheme == "mrt" else sinr_zf
    sinr = fn(real, res.rho, res.instance.noise)
    assert np.all(sinr >= xi_hat * (1 - 1e-7))
    assert np.all(res.per_bs_power <= res.instance.p_max * (1 + 1e-9))


def test_single_link_lp_rows():
    real, inst = example_instance()
    lp, meta = build_powermin_lp(inst)
    M, th, b = 100, 9.876e-11, 1e-10
    # stored scaled by xi_hat / sigma^2
    assert lp.A.shape == (2, 1)
    assert lp.A[0, 0] * SIGMA2 / 3.0 == pytest.approx(b - M * th / 3.0, rel=1e-14)
    assert lp.b[0] * SIGMA2 / 3.0 == pytest.approx(-SIGMA2, rel=1e-14)
    assert lp.A[1, 0] == 1.0 and lp.b[1] == 40.0
    assert [r[0] for r in meta["rows"]] == ["qos", "power"]


def test_single_link_optimum(ref):
    real, inst = example_instance()
    res = solve_instance(inst)
    assert res.feasible
    assert res.rho[0, 0] == pytest.approx(ref["rho_star_single_user"], rel=1e-9)
    assert res.association.serving_sets == ((0,),)
    k = powermin_kkt(res)
    assert k["gap"] <= 1e-8 * (1 + res.total_power) and k["slackness"] <= 1e-8


def test_single_link_infeasible_when_array_too_small():
    _, inst = example_instance(xi_hat=100 * 9.876e-11 / 1e-10)   # M theta == xi_hat beta
    res = solve_instance(inst)
    assert not res.feasible and res.solution.status is LpStatus.INFEASIBLE


def test_zero_targets_give_zero_power():
    real = random_realization(np.random.default_rng(0), L=3, K=4, M=32)
    res = solve_powermin(real, SINRTargets.from_rates(0.0, real.config), "zf")
    assert res.feasible and res.total_power == 0.0 and np.all(res.rho == 0)


def test_contamination_term_in_qos_row():
    cfg = NetworkConfig(num_bs=2, num_users=2, pilot_length=1, pilot_policy="round_robin",
                        antennas_per_bs=50)
    real = NetworkRealization.from_beta(cfg, [[1e-10, 2e-11], [3e-11, 4e-10]])
    inst = PowerMinInstance.from_realization(real, SINRTargets.from_rates(1.0, cfg), "mrt")
    lp, _ = build_powermin_lp(inst)
    row = lp.A[0].reshape(2, 2) * inst.noise / inst.xi_hat[0]
    # coefficient on rho[i, user 2] for user 1: M theta_i1 (pilot) + beta_i1 (interference)
    assert np.allclose(row[:, 1], 50 * real.theta[:, 0] + real.beta[:, 0], rtol=1e-13)


def test_two_identical_bs_match_single_bs():
    one = single_link(M=64)
    cfg = one.config.replace(num_bs=2)
    two = NetworkRealization.from_beta(cfg, [[1e-10], [1e-10]])
    t = SINRTargets.from_rates(2.0, one.config)
    a = solve_powermin(one, t, "mrt", p_max=np.inf)
    b = solve_powermin(two, t, "mrt", p_max=np.inf)
    assert b.total_power == pytest.approx(a.total_power, rel=1e-9)


def test_extract_association():
    assert extract_association(np.zeros((2, 3))) == ((), (), ())
    rho = np.array([[1.0, 1e-12, 0.5], [0.0, 2.0, 1e-6]])
    assert extract_association(rho) == ((0,), (1,), (0, 1))
    with pytest.raises(ValueError):
        extract_association(rho, 0.0)


@given(st.integers(0, 2**32 - 1), st.floats(1e-12, 1e-3), st.floats(1.0, 1e6))
def test_threshold_monotone(seed, thr, factor):
    rho = 10.0 ** np.random.default_rng(seed).uniform(-14, 0, (3, 5))
    small, large = extract_association(rho, thr), extract_association(rho, thr * factor)
    assert all(set(b) <= set(a) for a, b in zip(small, large))


def symmetric_instance(delta=(1.0, 1.0)):
    cfg = NetworkConfig(num_bs=2, num_users=1, pilot_length=1, antennas_per_bs=64)
    real = NetworkRealization.from_beta(cfg, [[1e-10], [1e-10]])
    return PowerMinInstance.from_realization(real, SINRTargets.from_rates(2.0, cfg), "mrt",
                                             delta=delta, p_max=np.inf)


def test_symmetric_scores_tie():
    inst = symmetric_instance()
    res = solve_instance(inst)
    s = res.association.rule_scores[:, 0]
    assert s[0] == pytest.approx(s[1], rel=1e-12)
    assert association_rule_check(inst, res.association.lam, res.association.mu, res.rho).ok


def test_raising_delta_removes_bs():
    inst = symmetric_instance(delta=(1.001, 1.0))
    res = solve_instance(inst)
    s = res.association.rule_scores[:, 0]
    assert s[0] > s[1]
    assert res.association.serving_sets == ((1,),)


def test_rule_check_reports_violations():
    inst = symmetric_instance(delta=(2.0, 1.0))
    res = solve_instance(inst)
    forced = np.array([[1e-3], [0.0]])
    rep = association_rule_check(inst, res.association.lam, res.association.mu, forced)
    assert not rep.ok and rep.violations[0][:2] == (0, 0)


@pytest.mark.parametrize("policy", ["orthogonal", "round_robin"])
@pytest.mark.parametrize("scheme", ["mrt", "zf"])
def test_random_drops_certified(policy, scheme):
    cfg = NetworkConfig(num_users=8, pilot_length=8 if policy == "orthogonal" else 4,
                        pilot_policy=policy, antennas_per_bs=64)
    solved = 0
    for seed in range(8):
        real = generate_network(cfg, seed)
        targets = SINRTargets.from_rates(1.0, cfg)
        res = solve_powermin(real, targets, scheme)
        if not res.feasible:
            continue
        solved += 1
        check_targets_met(real, res, scheme, targets.xi_hat)
        kkt = powermin_kkt(res)
        assert kkt["gap"] <= 1e-8 * (1 + abs(res.solution.objective))
        assert kkt["slackness"] <= 1e-8 * (1 + abs(res.solution.objective))
        a = res.association
        assert np.all(a.lam >= 0) and np.all(a.mu >= 0)
        assert all(len(s) > 0 for s in a.serving_sets)
        assert association_rule_check(res.instance, a.lam, a.mu, res.rho).ok
        base = max_snr_baseline(real, targets, scheme)
        if base.feasible:
            assert res.total_power <= base.total_power * (1 + 1e-9)
    assert solved > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 2.0), st.floats(0.0, 1.0))
def test_objective_monotone_in_targets(seed, xi, extra):
    real = generate_network(NetworkConfig(num_users=6, pilot_length=6, antennas_per_bs=64), seed)
    lo = solve_powermin(real, SINRTargets.from_rates(xi, real.config), "mrt")
    hi_xi = np.full(6, xi)
    hi_xi[0] += extra
    hi = solve_powermin(real, SINRTargets.from_rates(hi_xi, real.config), "mrt")
    if hi.feasible:
        assert lo.feasible and lo.total_power <= hi.total_power * (1 + 1e-9)


def test_single_bs_network_baseline_is_optimal():
    cfg = NetworkConfig(num_bs=1, num_users=5, pilot_length=5, antennas_per_bs=64)
    real = generate_network(cfg, 3)
    t = SINRTargets.from_rates(1.0, cfg)
    a, b = solve_powermin(real, t, "zf"), max_snr_baseline(real, t, "zf")
    assert a.feasible == b.feasible
    if a.feasible:
        assert a.total_power == pytest.approx(b.total_power, rel=1e-12)


def test_unbounded_budget_single_user_picks_best_score():
    cfg = NetworkConfig(num_bs=3, num_users=1, pilot_length=1, antennas_per_bs=64)
    real = NetworkRealization.from_beta(cfg, [[1e-11], [5e-10], [2e-10]])
    res = solve_powermin(real, SINRTargets.from_rates(1.5, cfg), "mrt", p_max=np.inf)
    assert res.association.serving_sets == ((1,),)
    assert np.argmin(res.association.rule_scores[:, 0]) == 1


def test_zf_requires_enough_antennas():
    real = random_realization(np.random.default_rng(0), L=2, K=4, M=4)
    with pytest.raises(ValueError):
        PowerMinInstance.from_realization(real, SINRTargets.from_rates(1.0, real.config), "zf")
