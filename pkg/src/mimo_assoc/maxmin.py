"""Weighted max-min SE by bisection over power-minimisation feasibility."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import Scheme, SINRTargets
from .network import NetworkRealization
from .powermin import PowerMinInstance, max_snr_mask, solve_instance

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.01  # bit/symbol


@dataclass(frozen=True)
class MaxMinResult:
    xi_lower: float
    xi_upper: float
    rho: np.ndarray
    iterations: int
    xi0_upper: float
    widenings: int = 0

    @property
    def total_power(self) -> float:
        return float(np.sum(self.rho))


def _weights(weights, K):
    w = np.ones(K) if weights is None else np.broadcast_to(np.asarray(weights, float), (K,)).copy()
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    return w


def upper_bound_xi0(realization: NetworkRealization, scheme, weights=None,
                    coherent: bool = False) -> float:
    """Initial upper end of the bisection range (always infeasible).

    With coherent transmission the amplitudes of up to L BSs add before
    squaring; by Cauchy-Schwarz the SNR argument grows by at most a factor L.
    """
    scheme = Scheme.parse(scheme)
    cfg = realization.config
    M, K = realization.M, realization.K
    w = _weights(weights, K)
    if scheme is Scheme.MRT:
        snr = np.full(K, float(M))
    else:
        if M <= K:
            raise ValueError(f"ZF needs M >= K + 1 (M={M}, K={K})")
        p = cfg.pilot_powers
        snr = (M - K) * p * cfg.pilot_length / cfg.ul_noise * realization.beta.sum(axis=0)
    if coherent:
        snr = realization.L * snr
    return float(cfg.prelog * np.min(np.log2(1.0 + snr) / w))


def iteration_count(xi0_upper: float, delta: float) -> int:
    return max(0, math.ceil(math.log2(xi0_upper / delta)))


def bisect(xi0_upper: float, delta: float, feasible: Callable[[float], np.ndarray | None],
           zero_allocation: np.ndarray, max_widen: int = 8) -> MaxMinResult:
    """Bisection on [0, xi0_upper]; ``feasible(xi)`` returns an allocation or None.

    The upper end is first confirmed infeasible; if it is not (numerical
    slack), it is doubled with a warning.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    widen = 0
    upper = xi0_upper
    while feasible(upper) is not None:
        if widen >= max_widen:
            raise RuntimeError(f"xi = {upper} still feasible after {widen} widenings")
        log.warning("bisection upper bound %.6g is feasible; widening", upper)
        upper *= 2.0
        widen += 1
    start = upper
    lower = 0.0
    best = zero_allocation
    iterations = 0
    while upper - lower > delta:
        cand = 0.5 * (upper + lower)
        rho = feasible(cand)
        if rho is None:
            upper = cand
        else:
            best = rho
            lower = cand
        iterations += 1
    return MaxMinResult(lower, upper, best, iterations, start, widen)


def powermin_oracle(realization: NetworkRealization, scheme, weights=None, allowed=None,
                    **kwargs) -> Callable[[float], np.ndarray | None]:
    """Feasibility oracle xi -> optimal allocation for targets w_k * xi, or None."""
    K = realization.K
    w = _weights(weights, K)
    cfg = realization.config
    base = PowerMinInstance.from_realization(realization, SINRTargets.from_rates(0.0, cfg), scheme,
                                             **kwargs)

    def feasible(xi: float):
        targets = SINRTargets.from_rates(w * xi, cfg, K)
        inst = PowerMinInstance(base.scheme, base.gain, base.interference, targets.xi_hat,
                                base.delta, base.p_max, base.noise, base.contamination)
        res = solve_instance(inst, allowed)
        return res.rho if res.feasible else None

    return feasible


def maxmin_bisection(realization: NetworkRealization, scheme, weights=None,
                     delta: float = DEFAULT_DELTA, allowed=None, **kwargs) -> MaxMinResult:
    xi0 = upper_bound_xi0(realization, scheme, weights)
    oracle = powermin_oracle(realization, scheme, weights, allowed, **kwargs)
    return bisect(xi0, delta, oracle, np.zeros((realization.L, realization.K)))


def maxmin_max_snr(realization: NetworkRealization, scheme, weights=None,
                   delta: float = DEFAULT_DELTA, **kwargs) -> MaxMinResult:
    return maxmin_bisection(realization, scheme, weights, delta,
                            allowed=max_snr_mask(realization), **kwargs)
