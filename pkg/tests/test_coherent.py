import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimo_assoc.bounds import GainStatistics, SINRTargets, closed_form_statistics, sinr_mrt, sinr_zf
from mimo_assoc.coherent import (build_coherent_socp, coherent_maxmin, coherent_sinr,
                                 coherent_sinr_general, instance_coherent_sinr, solve_coherent_instance,
                                 solve_coherent_powermin)
from mimo_assoc.config import NetworkConfig
from mimo_assoc.maxmin import iteration_count, maxmin_bisection
from mimo_assoc.network import NetworkRealization, generate_network
from mimo_assoc.powermin import PowerMinInstance, solve_powermin
from mimo_assoc.socp import SocpStatus

from conftest import random_realization, single_link

SMALL = NetworkConfig(num_users=5, pilot_length=5, antennas_per_bs=64)


@pytest.mark.parametrize("scheme", ["mrt", "zf"])
def test_single_serving_bs_matches_noncoherent(scheme):
    real = random_realization(np.random.default_rng(0), L=3, K=4, M=32)
    rho = np.random.default_rng(1).uniform(0, 1, (3, 4))
    rho[1:, 2] = 0.0
    ref = (sinr_mrt if scheme == "mrt" else sinr_zf)(real, rho)
    assert coherent_sinr(real, rho, scheme)[2] == pytest.approx(ref[2], rel=1e-13)


def test_two_equal_links_double_the_numerator():
    z = np.zeros((2, 1))
    g = np.full((2, 1), 5.0)
    inst = PowerMinInstance("mrt", g, z, np.array([1.0]), np.ones(2), np.full(2, np.inf), 1.0,
                            np.zeros((1, 1), bool))
    rho = np.full((2, 1), 0.3)
    assert instance_coherent_sinr(inst, rho)[0] == pytest.approx(4 * 0.3 * 5.0, rel=1e-14)
    noncoherent = np.sum(rho * g) / 1.0
    assert instance_coherent_sinr(inst, rho)[0] == pytest.approx(2 * noncoherent, rel=1e-14)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_coherent_dominates_for_same_allocation(seed):
    rng = np.random.default_rng(seed)
    real = random_realization(rng, L=3, K=4, M=32)
    rho = rng.uniform(0, 1, (3, 4))
    assert np.all(coherent_sinr(real, rho, "mrt") >= sinr_mrt(real, rho) * (1 - 1e-12))


def test_general_sinr_with_independent_bs_moments():
    """Cross-BS moments of independent links reproduce the closed form."""
    real = random_realization(np.random.default_rng(2), L=3, K=4, M=40)
    rho = np.random.default_rng(3).uniform(0, 1, (3, 4))
    for scheme in ("mrt", "zf"):
        stats = closed_form_statistics(real, scheme)
        L, K = real.L, real.K
        mean = np.zeros((L, K, K), complex)
        mean[:, np.arange(K), np.arange(K)] = stats.mean_gain
        cross = np.einsum("ikt,jkt->ijkt", mean, mean.conj())
        cross[np.arange(L), np.arange(L)] = stats.second_moment
        full = GainStatistics(stats.mean_gain, stats.second_moment, cross)
        got = coherent_sinr_general(full, rho, real.config.dl_noise)
        assert np.allclose(got, coherent_sinr(real, rho, scheme), rtol=1e-12)
    with pytest.raises(ValueError):
        coherent_sinr_general(stats, rho, 1.0)


@pytest.mark.parametrize("policy", ["orthogonal", "round_robin"])
def test_cone_rows_expand_to_sinr_constraint(policy):
    rng = np.random.default_rng(4)
    real = random_realization(rng, L=2, K=4, M=32, policy=policy)
    inst = PowerMinInstance.from_realization(real, SINRTargets.from_rates([0.5, 1.0, 1.5, 2.0], real.config),
                                             "mrt")
    prog, idx = build_coherent_socp(inst)
    u = rng.uniform(0, 1e-1, inst.L * inst.K)
    rho = (u ** 2).reshape(inst.L, inst.K)
    C = inst.contamination.astype(float)
    num = np.sum(np.sqrt(rho * inst.gain), axis=0) ** 2
    den = (np.einsum("ik,it,kt->k", inst.gain, rho, C) + np.einsum("ik,it->k", inst.interference, rho)
           + inst.noise)
    for k in range(inst.K):
        cn = prog.cones[k]
        lhs = (cn.c @ u[idx] + cn.d) ** 2 - np.sum((cn.A @ u[idx] + cn.b) ** 2)
        assert lhs == pytest.approx((num[k] - inst.xi_hat[k] * den[k]) / inst.noise, rel=1e-10)
    assert len(prog.cones) == inst.K + inst.L


def test_single_link_matches_lp():
    real = single_link(M=100)
    t = SINRTargets.from_rates(1.5, real.config)
    coh = solve_coherent_powermin(real, t, "mrt")
    lp = solve_powermin(real, t, "mrt")
    assert coh.feasible and coh.total_power == pytest.approx(lp.total_power, rel=1e-6)


def test_symmetric_two_bs_optimum():
    cfg = NetworkConfig(num_bs=2, num_users=1, pilot_length=1, antennas_per_bs=64)
    real = NetworkRealization.from_beta(cfg, [[1e-10], [1e-10]])
    t = SINRTargets.from_rates(2.0, cfg)
    res = solve_coherent_powermin(real, t, "mrt")
    g, z, s2, x = 64 * real.theta[0, 0], 1e-10, cfg.dl_noise, t.xi_hat[0]
    assert res.total_power == pytest.approx(2 * x * s2 / (4 * g - 2 * x * z), rel=1e-6)


@pytest.mark.parametrize("scheme", ["mrt", "zf"])
@pytest.mark.parametrize("seed", range(3))
def test_coherent_power_not_above_noncoherent(scheme, seed):
    real = generate_network(SMALL, seed)
    t = SINRTargets.from_rates(1.0, real.config)
    lp = solve_powermin(real, t, scheme)
    coh = solve_coherent_powermin(real, t, scheme)
    if lp.feasible:
        assert coh.feasible
        assert coh.total_power <= lp.total_power + 1e-6
    if coh.feasible:
        assert np.all(coherent_sinr(real, coh.rho, scheme) >= t.xi_hat * (1 - 1e-6))
        assert np.all(coh.rho.sum(axis=1) <= real.config.max_powers * (1 + 1e-6))
        c = coh.certificate
        assert c["primal"] <= 1e-6 and c["stationarity"] <= 1e-6
        assert c["gap"] <= 1e-6 * max(1.0, coh.total_power)


def test_infeasible_targets_reported():
    real = single_link(M=10, max_power=1e-9)
    res = solve_coherent_powermin(real, SINRTargets.from_rates(5.0, real.config), "mrt")
    assert res.status is SocpStatus.INFEASIBLE and not res.feasible and res.rho is None


def test_zero_targets():
    real = generate_network(SMALL, 0)
    res = solve_coherent_powermin(real, SINRTargets.from_rates(0.0, real.config), "mrt")
    assert res.feasible and res.total_power == 0.0


@pytest.mark.parametrize("scheme", ["mrt", "zf"])
def test_coherent_maxmin_dominates(scheme):
    real = generate_network(SMALL, 1)
    nc = maxmin_bisection(real, scheme)
    coh, final = coherent_maxmin(real, scheme)
    assert coh.xi_lower >= nc.xi_lower - 0.01
    assert coh.iterations == iteration_count(coh.xi0_upper, 0.01)
    assert coh.widenings == 0
    assert final.feasible
    targets = SINRTargets.from_rates(coh.xi_lower, real.config)
    assert np.all(coherent_sinr(real, coh.rho, scheme) >= targets.xi_hat * (1 - 1e-6))
