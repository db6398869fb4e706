"""Coherent joint transmission: SINR, power minimisation as an SOCP, and max-min.

Variables are amplitudes ``u[i, t] = sqrt(rho[i, t])``, flattened BS-major
like the LP. The SE constraint of user k becomes the cone

    || sqrt(xi_hat_k) [ g_k o u_t  (t in P_k \\ k),  z_k o u_t  (all t),  1 ] ||
        <= g_k^T u_k

with ``g_k = sqrt(gain[:, k] / noise)`` and ``z_k = sqrt(interference[:, k] / noise)``
(``o`` is the elementwise product), and each power budget is
``||u'_i|| <= sqrt(P_max,i)`` on the row of BS i.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import GainStatistics, SINRTargets
from .maxmin import MaxMinResult, _weights, bisect, upper_bound_xi0, DEFAULT_DELTA
from .network import NetworkRealization
from .powermin import PowerMinInstance
from .socp import SOCProgram, SocpStatus, find_feasible, solve_socp


def coherent_sinr(realization: NetworkRealization, rho, scheme, dl_noise=None) -> np.ndarray:
    inst = PowerMinInstance.from_realization(realization, SINRTargets.from_rates(0.0, realization.config),
                                             scheme, noise=dl_noise)
    return instance_coherent_sinr(inst, rho)


def instance_coherent_sinr(inst: PowerMinInstance, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    C = inst.contamination.astype(float)
    num = np.sum(np.sqrt(rho * inst.gain), axis=0) ** 2
    pilot = np.einsum("ik,it,kt->k", inst.gain, rho, C)
    other = np.einsum("ik,it->k", inst.interference, rho)
    return num / (pilot + other + inst.noise)


def coherent_sinr_general(stats: GainStatistics, rho, dl_noise: float) -> np.ndarray:
    """Coherent-transmission SINR from arbitrary statistics (needs ``cross_moment``).

    Every BS sends the same symbol to user t with amplitude sqrt(rho[i, t]),
    so the received power of stream t is a quadratic form over BS pairs.
    """
    if stats.cross_moment is None:
        raise ValueError("coherent SINR needs the cross-BS moments")
    amp = np.sqrt(np.asarray(rho, dtype=float))
    desired = np.abs(np.sum(amp * stats.mean_gain, axis=0)) ** 2
    received = np.einsum("it,jt,ijkt->k", amp, amp, stats.cross_moment).real
    return desired / (received - desired + dl_noise)


def build_coherent_socp(inst: PowerMinInstance, allowed=None) -> tuple[SOCProgram, np.ndarray]:
    """SOCP over the allowed amplitudes; returns the program and the variable index map."""
    L, K = inst.L, inst.K
    mask = np.ones((L, K), dtype=bool) if allowed is None else np.asarray(allowed, bool)
    idx = np.flatnonzero(mask.ravel())
    n = idx.size
    # selector from reduced variables to the full L*K amplitude vector
    S = np.zeros((L * K, n))
    S[idx, np.arange(n)] = 1.0
    g = np.sqrt(inst.gain / inst.noise)
    z = np.sqrt(inst.interference / inst.noise)
    prog = SOCProgram(np.repeat(inst.delta, K)[idx], np.zeros(n))
    C = inst.contamination
    for k in range(K):
        if inst.xi_hat[k] <= 0:
            continue
        blocks = []
        for t in np.flatnonzero(C[k]):
            E = np.zeros((L, L * K))
            E[np.arange(L), np.arange(L) * K + t] = g[:, k]
            blocks.append(E)
        for t in range(K):
            E = np.zeros((L, L * K))
            E[np.arange(L), np.arange(L) * K + t] = z[:, k]
            blocks.append(E)
        A = np.sqrt(inst.xi_hat[k]) * np.vstack(blocks) @ S
        keep = np.any(A != 0, axis=1)
        A = np.vstack([A[keep], np.zeros((1, n))])
        b = np.zeros(A.shape[0])
        b[-1] = np.sqrt(inst.xi_hat[k])
        own = np.zeros(L * K)
        own[np.arange(L) * K + k] = g[:, k]
        prog.add_cone(A, b, own @ S, 0.0)
    for i in range(L):
        if not np.isfinite(inst.p_max[i]):
            continue
        rows = np.zeros((K, L * K))
        rows[np.arange(K), i * K + np.arange(K)] = 1.0
        A = rows @ S
        A = A[np.any(A != 0, axis=1)]
        prog.add_cone(A, np.zeros(A.shape[0]), np.zeros(n), np.sqrt(inst.p_max[i]))
    return prog, idx


@dataclass(frozen=True)
class CoherentResult:
    status: SocpStatus
    rho: np.ndarray | None
    total_power: float
    certificate: dict

    @property
    def feasible(self) -> bool:
        return self.status is SocpStatus.OPTIMAL


def _amplitudes_to_rho(inst, idx, x):
    u = np.zeros(inst.L * inst.K)
    u[idx] = np.abs(x)
    return (u ** 2).reshape(inst.L, inst.K)


def solve_coherent_instance(inst: PowerMinInstance, allowed=None, eps: float = 1e-8) -> CoherentResult:
    if not np.any(inst.xi_hat > 0):
        return CoherentResult(SocpStatus.OPTIMAL, np.zeros((inst.L, inst.K)), 0.0,
                              {"primal": 0.0, "dual": 0.0, "stationarity": 0.0, "gap": 0.0})
    prog, idx = build_coherent_socp(inst, allowed)
    sol = solve_socp(prog, eps=eps)
    if sol.status is not SocpStatus.OPTIMAL:
        return CoherentResult(sol.status, None, np.inf, sol.certificate)
    rho = _amplitudes_to_rho(inst, idx, sol.x)
    total = float(np.sum(inst.delta[:, None] * rho))
    return CoherentResult(sol.status, rho, total, sol.certificate)


def solve_coherent_powermin(realization: NetworkRealization, targets: SINRTargets, scheme,
                            delta=None, p_max=None, noise=None, allowed=None) -> CoherentResult:
    inst = PowerMinInstance.from_realization(realization, targets, scheme, delta, p_max, noise)
    return solve_coherent_instance(inst, allowed)


def coherent_oracle(realization: NetworkRealization, scheme, weights=None, allowed=None, **kwargs):
    """xi -> strictly feasible amplitudes-squared (phase I point) or None."""
    K = realization.K
    w = _weights(weights, K)
    cfg = realization.config
    base = PowerMinInstance.from_realization(realization, SINRTargets.from_rates(0.0, cfg), scheme,
                                             **kwargs)

    def instance(xi):
        targets = SINRTargets.from_rates(w * xi, cfg, K)
        return PowerMinInstance(base.scheme, base.gain, base.interference, targets.xi_hat,
                                base.delta, base.p_max, base.noise, base.contamination)

    def feasible(xi: float):
        inst = instance(xi)
        if not np.any(inst.xi_hat > 0):
            return np.zeros((inst.L, inst.K))
        prog, idx = build_coherent_socp(inst, allowed)
        status, x, _, _ = find_feasible(prog)
        if status is SocpStatus.FEASIBLE:
            return _amplitudes_to_rho(inst, idx, x)
        if status is SocpStatus.MAX_ITER:
            raise RuntimeError(f"phase I did not converge at xi={xi}")
        return None

    feasible.instance = instance
    return feasible


def coherent_maxmin(realization: NetworkRealization, scheme, weights=None,
                    delta: float = DEFAULT_DELTA, allowed=None, **kwargs) -> tuple[MaxMinResult, CoherentResult]:
    """Bisection with the coherent feasibility test.

    The returned MaxMinResult carries the minimum-power coherent allocation at
    ``xi_lower``; the CoherentResult holds its solver certificate.
    """
    xi0 = upper_bound_xi0(realization, scheme, weights, coherent=True)
    oracle = coherent_oracle(realization, scheme, weights, allowed, **kwargs)
    res = bisect(xi0, delta, oracle, np.zeros((realization.L, realization.K)))
    final = solve_coherent_instance(oracle.instance(res.xi_lower), allowed)
    rho = final.rho if final.feasible else res.rho
    return MaxMinResult(res.xi_lower, res.xi_upper, rho, res.iterations, res.xi0_upper,
                        res.widenings), final
