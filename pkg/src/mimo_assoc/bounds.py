"""Ergodic spectral-efficiency lower bounds for non-coherent joint transmission.

Index conventions used throughout the package:

* ``rho[i, t]``: power BS ``i`` spends on user ``t`` (L x K, Watts)
* ``mean_gain[i, k]``: E{h_ik^H w_ik}
* ``second_moment[i, k, t]``: E{|h_ik^H w_it|^2}
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .network import NetworkRealization


class Scheme(str, enum.Enum):
    MRT = "mrt"
    ZF = "zf"

    @classmethod
    def parse(cls, value) -> "Scheme":
        return value if isinstance(value, cls) else cls(str(value).lower())


def prelog(dl_fraction: float, tau_p: int, tau_c: int) -> float:
    return dl_fraction * (1.0 - tau_p / tau_c)


def rate_from_sinr(sinr, dl_fraction: float, tau_p: int, tau_c: int):
    """Spectral efficiency in bit/symbol for a given effective SINR."""
    s = np.asarray(sinr, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR must be nonnegative")
    out = prelog(dl_fraction, tau_p, tau_c) * np.log2(1.0 + s)
    return float(out) if out.ndim == 0 else out


def sinr_from_rate(rate, dl_fraction: float, tau_p: int, tau_c: int):
    """Inverse of :func:`rate_from_sinr`."""
    r = np.asarray(rate, dtype=float)
    if np.any(r < 0):
        raise ValueError("rate must be nonnegative")
    out = np.expm1(np.log(2.0) * r / prelog(dl_fraction, tau_p, tau_c))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SINRTargets:
    xi: np.ndarray        # bit/symbol per user
    xi_hat: np.ndarray    # linear SINR per user

    @classmethod
    def from_rates(cls, xi, config, num_users: int | None = None) -> "SINRTargets":
        K = config.num_users if num_users is None else num_users
        xi = np.broadcast_to(np.asarray(xi, dtype=float), (K,)).copy()
        xi_hat = sinr_from_rate(xi, config.dl_fraction, config.pilot_length,
                                config.coherence_length)
        return cls(xi, np.atleast_1d(xi_hat))


@dataclass(frozen=True)
class GainStatistics:
    mean_gain: np.ndarray       # (L, K) complex
    second_moment: np.ndarray   # (L, K, K)
    # optional E{(h_ik^H w_it) conj(h_jk^H w_jt)}, (L, L, K, K); coherent transmission only
    cross_moment: np.ndarray | None = None

    def __post_init__(self):
        L, K = self.mean_gain.shape
        if self.second_moment.shape != (L, K, K):
            raise ValueError("second_moment must have shape (L, K, K)")
        if self.cross_moment is not None and self.cross_moment.shape != (L, L, K, K):
            raise ValueError("cross_moment must have shape (L, L, K, K)")

    def variance_ok(self, rtol: float = 1e-12) -> bool:
        own = np.einsum("ikk->ik", self.second_moment)
        return bool(np.all(own >= np.abs(self.mean_gain) ** 2 * (1 - rtol)))


def _signal_terms(stats: GainStatistics, rho):
    rho = np.asarray(rho, dtype=float)
    desired = rho * np.abs(stats.mean_gain) ** 2                    # [i, k]
    received = np.einsum("it,ikt->k", rho, stats.second_moment)      # [k]
    return desired, received


def sinr_general(stats: GainStatistics, rho, dl_noise: float) -> np.ndarray:
    """Effective SINR of each user for arbitrary channel statistics and precoding."""
    desired, received = _signal_terms(stats, rho)
    num = desired.sum(axis=0)
    return num / (received - num + dl_noise)


def sinr_per_bs(stats: GainStatistics, rho, dl_noise: float, order=None) -> np.ndarray:
    """SINR of the stream from each BS under successive decoding.

    Returns an (L, K) table whose entry [l, k] belongs to BS ``l``. ``order``
    lists BS indices in decoding order (default 0..L-1); BSs decoded earlier
    are subtracted from the interference of later ones.
    """
    desired, received = _signal_terms(stats, rho)
    L = desired.shape[0]
    order = np.arange(L) if order is None else np.asarray(order)
    out = np.empty_like(desired)
    removed = np.zeros(desired.shape[1])
    for l in order:
        removed = removed + desired[l]
        out[l] = desired[l] / (received - removed + dl_noise)
    return out


def closed_form_statistics(realization: NetworkRealization, scheme) -> GainStatistics:
    """Exact E{h^H w}, E{|h^H w|^2} for Rayleigh fading with MRT or ZF."""
    scheme = Scheme.parse(scheme)
    beta, theta = realization.beta, realization.theta
    L, K = beta.shape
    M = realization.M
    share = realization.sharing
    if scheme is Scheme.MRT:
        gain = M * theta
        base = beta
    else:
        _require_zf(M, K)
        gain = (M - K) * theta
        base = beta - theta
    second = np.repeat(base[:, :, None], K, axis=2) + gain[:, :, None] * share[None, :, :]
    return GainStatistics(np.sqrt(gain).astype(complex), second)


def _require_zf(M: int, K: int) -> None:
    if M <= K:
        raise ValueError(f"ZF needs M >= K + 1 (M={M}, K={K})")


def _closed_form_sinr(gain, interf, realization: NetworkRealization, rho, dl_noise):
    rho = np.asarray(rho, dtype=float)
    contam = realization.contamination.astype(float)          # [k, t]
    num = np.sum(rho * gain, axis=0)                          # [k]
    pilot = np.einsum("ik,it,kt->k", gain, rho, contam)
    other = np.einsum("ik,it->k", interf, rho)
    return num / (pilot + other + dl_noise)


def sinr_mrt(realization: NetworkRealization, rho, dl_noise: float | None = None) -> np.ndarray:
    noise = realization.config.dl_noise if dl_noise is None else dl_noise
    M = realization.M
    return _closed_form_sinr(M * realization.theta, realization.beta, realization, rho, noise)


def sinr_zf(realization: NetworkRealization, rho, dl_noise: float | None = None) -> np.ndarray:
    noise = realization.config.dl_noise if dl_noise is None else dl_noise
    M, K = realization.M, realization.K
    _require_zf(M, K)
    return _closed_form_sinr((M - K) * realization.theta, realization.beta - realization.theta,
                             realization, rho, noise)


def sinr_closed_form(realization: NetworkRealization, rho, scheme, dl_noise=None) -> np.ndarray:
    return (sinr_mrt if Scheme.parse(scheme) is Scheme.MRT else sinr_zf)(realization, rho, dl_noise)


def user_rates(realization: NetworkRealization, rho, scheme, dl_noise=None) -> np.ndarray:
    cfg = realization.config
    sinr = sinr_closed_form(realization, rho, scheme, dl_noise)
    return rate_from_sinr(np.maximum(sinr, 0.0), cfg.dl_fraction, cfg.pilot_length,
                          cfg.coherence_length)


@dataclass(frozen=True)
class AsymptoticLimit:
    """Large-array SINR limit. ``limit`` is NaN wherever ``bounded`` is False."""
    limit: np.ndarray
    bounded: np.ndarray


def sinr_asymptotic(realization: NetworkRealization, rho) -> AsymptoticLimit:
    rho = np.asarray(rho, dtype=float)
    theta = realization.theta
    contam = realization.contamination.astype(float)
    num = np.sum(rho * theta, axis=0)
    den = np.einsum("ik,it,kt->k", theta, rho, contam)
    bounded = den > 0
    limit = np.full(num.shape, np.nan)
    limit[bounded] = num[bounded] / den[bounded]
    return AsymptoticLimit(limit, bounded)
