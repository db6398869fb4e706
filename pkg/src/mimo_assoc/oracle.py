"""Monte Carlo ground truth for the ergodic SE expressions.

Channels are drawn i.i.d. Rayleigh, h ~ CN(0, beta I), the UL pilot phase
and MMSE estimation are run sample by sample, precoders are built from the
estimates, and the expectations E{h^H w} and E{|h^H w|^2} entering the SINR
bounds are estimated together with their standard errors.

Arrays in a batch are indexed ``[sample, bs, antenna, user]``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .bounds import GainStatistics, Scheme
from .network import NetworkRealization

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
DEFAULT_CHUNK = 500


class RankDeficientSample(RuntimeError):
    """A sampled estimate matrix is numerically singular (ZF)."""


def complex_normal(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """CN(0, var) samples; ``var`` broadcasts against ``shape``."""
    z = rng.standard_normal((*shape, 2)).view(np.complex128)[..., 0]
    z *= np.sqrt(np.asarray(var) / 2.0)
    return z


@dataclass(frozen=True)
class ChannelBatch:
    H: np.ndarray             # true channels
    H_hat: np.ndarray         # MMSE estimates
    theta: np.ndarray         # analytic estimate variance (L, K), used for normalisation
    W: np.ndarray | None = None
    scheme: Scheme | None = None

    @property
    def N(self) -> int:
        return self.H.shape[0]

    @property
    def E(self) -> np.ndarray:
        """Estimation error ``H_hat - H``."""
        return self.H_hat - self.H

    def precoded(self, scheme) -> "ChannelBatch":
        scheme = Scheme.parse(scheme)
        return replace(self, W=build_precoders(self, scheme), scheme=scheme)


def pilot_groups(pilot_sets) -> np.ndarray:
    """Index of the pilot sequence used by each user (smallest member of P_k)."""
    first = np.array([min(p) for p in pilot_sets])
    _, group = np.unique(first, return_inverse=True)
    return group


def sample_pilot_pipeline(realization: NetworkRealization, n: int, seed) -> ChannelBatch:
    """Draw n channel realizations and their MMSE estimates.

    Users sharing a pilot see the same despread observation
    ``tau_p sum_{t in P_k} sqrt(p_t) h_t + n``, with n ~ CN(0, tau_p sigma_UL^2 I);
    the estimate scales it by ``sqrt(p_k) beta_k / (tau_p sum p beta + sigma_UL^2)``.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    cfg = realization.config
    L, M, K = realization.L, realization.M, realization.K
    beta = realization.beta
    p = cfg.pilot_powers
    tau_p = cfg.pilot_length
    group = pilot_groups(realization.pilot_sets)
    G = group.max() + 1
    onehot = np.zeros((K, G))
    onehot[np.arange(K), group] = 1.0

    H = complex_normal(rng, (n, L, M, K), beta[None, :, None, :])
    noise = complex_normal(rng, (n, L, M, G), tau_p * cfg.ul_noise)
    Y = tau_p * (H * np.sqrt(p)) @ onehot + noise               # (n, L, M, G)
    load = (p * beta) @ onehot                                   # (L, G)
    scale = np.sqrt(p) * beta / (tau_p * load[:, group] + cfg.ul_noise)
    H_hat = Y[..., group] * scale[None, :, None, :]
    return ChannelBatch(H, H_hat, realization.theta.copy())


def build_precoders(batch: ChannelBatch, scheme) -> np.ndarray:
    """Unit mean-square precoders from the estimates.

    MRT: ``w = h_hat / sqrt(M theta)``. ZF: ``W = H_hat (H_hat^H H_hat)^{-1}``
    with column t scaled by ``sqrt((M - K) theta_t)``.
    """
    scheme = Scheme.parse(scheme)
    n, L, M, K = batch.H_hat.shape
    if scheme is Scheme.MRT:
        return batch.H_hat / np.sqrt(M * batch.theta)[None, :, None, :]
    if M <= K:
        raise ValueError(f"ZF needs M >= K + 1 (M={M}, K={K})")
    gram = np.conj(np.swapaxes(batch.H_hat, 2, 3)) @ batch.H_hat     # (n, L, K, K)
    cond = np.linalg.cond(gram)
    if not np.all(np.isfinite(cond)) or np.any(cond > 1e12):
        bad = np.argwhere(~(cond <= 1e12))
        raise RankDeficientSample(
            f"{len(bad)} singular estimate Gram matrices (first at sample/BS {bad[0].tolist()}, "
            f"cond {cond[tuple(bad[0])]:.3g}); pilot reuse makes ZF undefined")
    R = np.linalg.inv(gram)
    return (batch.H_hat @ R) * np.sqrt((M - K) * batch.theta)[None, :, None, :]


def effective_gains(batch: ChannelBatch) -> np.ndarray:
    """``a[n, i, k, t] = h_{i,k}^H w_{i,t}``."""
    if batch.W is None:
        raise ValueError("batch has no precoders; call precoded() first")
    return np.conj(np.swapaxes(batch.H, 2, 3)) @ batch.W


@dataclass(frozen=True)
class EmpiricalStatistics:
    """Sample estimates of the gain statistics plus what the delta method needs.

    ``feature_mean``/``feature_cov`` hold, per user k, the mean and covariance
    of ``[Re a_ikk (L), Im a_ikk (L), |a_ikt|^2 (L*K)]``.
    """
    stats: GainStatistics
    mean_gain_se: np.ndarray      # (L, K), standard error of the complex mean
    second_moment_se: np.ndarray  # (L, K, K)
    feature_mean: np.ndarray
    feature_cov: np.ndarray
    n: int

    def sinr(self, rho, dl_noise: float) -> tuple[np.ndarray, np.ndarray]:
        """SINR of the non-coherent bound and its delta-method standard error."""
        rho = np.asarray(rho, dtype=float)
        L, K = rho.shape
        f = self.feature_mean
        re, im, B = f[:, :L], f[:, L:2 * L], f[:, 2 * L:].reshape(K, L, K)
        own = rho.T                                               # [k, i] = rho[i, k]
        num = np.sum(own * (re ** 2 + im ** 2), axis=1)
        den = np.einsum("it,kit->k", rho, B) - num + dl_noise
        sinr = num / den
        fac = (den + num) / den ** 2
        d_b = -(num / den ** 2)[:, None, None] * rho[None, :, :]      # [k, i, t]
        grad = np.concatenate([2 * own * re * fac[:, None], 2 * own * im * fac[:, None],
                               d_b.reshape(K, L * K)], axis=1)
        var = np.einsum("kp,kpq,kq->k", grad, self.feature_cov, grad) / self.n
        return sinr, np.sqrt(np.maximum(var, 0.0))


class GainAccumulator:
    """Streaming sums over chunks of effective gains ``a[n, i, k, t]``."""

    def __init__(self, L: int, K: int):
        self.L, self.K = L, K
        P = 2 * L + L * K
        self.n = 0
        self.s_a = np.zeros((L, K), complex)
        self.s_re2 = np.zeros((L, K))
        self.s_im2 = np.zeros((L, K))
        self.s_b = np.zeros((L, K, K))
        self.s_b2 = np.zeros((L, K, K))
        self.s_cross = np.zeros((L, L, K, K), complex)
        self.s_f = np.zeros((K, P))
        self.s_ff = np.zeros((K, P, P))

    def add(self, a: np.ndarray) -> "GainAccumulator":
        n, L, K, _ = a.shape
        own = np.einsum("nikk->nik", a)
        b = a.real ** 2 + a.imag ** 2
        self.n += n
        self.s_a += own.sum(axis=0)
        self.s_re2 += np.sum(own.real ** 2, axis=0)
        self.s_im2 += np.sum(own.imag ** 2, axis=0)
        self.s_b += b.sum(axis=0)
        self.s_b2 += np.sum(b ** 2, axis=0)
        flat = a.reshape(n, L, K * K).transpose(2, 1, 0)                  # (KK, L, n)
        cross = flat @ np.conj(flat.transpose(0, 2, 1))                   # (KK, L, L)
        self.s_cross += cross.transpose(1, 2, 0).reshape(L, L, K, K)
        feats = np.concatenate([own.real.transpose(0, 2, 1), own.imag.transpose(0, 2, 1),
                                b.transpose(0, 2, 1, 3).reshape(n, K, L * K)], axis=2)
        self.s_f += feats.sum(axis=0)
        fk = feats.transpose(1, 2, 0)                                     # (K, P, n)
        self.s_ff += fk @ fk.transpose(0, 2, 1)
        return self

    def result(self) -> EmpiricalStatistics:
        if self.n < 2:
            raise ValueError("need at least two samples")
        n = self.n
        mean = self.s_a / n
        var_re = (self.s_re2 / n - mean.real ** 2) * n / (n - 1)
        var_im = (self.s_im2 / n - mean.imag ** 2) * n / (n - 1)
        b = self.s_b / n
        var_b = (self.s_b2 / n - b ** 2) * n / (n - 1)
        fm = self.s_f / n
        cov = (self.s_ff / n - np.einsum("kp,kq->kpq", fm, fm)) * n / (n - 1)
        stats = GainStatistics(mean, b, self.s_cross / n)
        return EmpiricalStatistics(stats, np.sqrt(np.maximum(var_re + var_im, 0.0) / n),
                                   np.sqrt(np.maximum(var_b, 0.0) / n), fm, cov, n)


def empirical_gain_statistics(batch: ChannelBatch) -> EmpiricalStatistics:
    L, K = batch.theta.shape
    return GainAccumulator(L, K).add(effective_gains(batch)).result()


def monte_carlo_statistics(realization: NetworkRealization, schemes=("mrt", "zf"),
                           num_samples: int = DEFAULT_SAMPLES, seed=0,
                           chunk: int = DEFAULT_CHUNK, max_redraws: int = 10) -> dict:
    """Stream ``num_samples`` channel draws and estimate statistics for each scheme.

    All schemes share the same channel samples. Chunk c draws from the c-th
    child of ``SeedSequence(seed)``; a chunk with a singular ZF Gram matrix
    is discarded and redrawn from the next child (logged).
    """
    schemes = [Scheme.parse(s) for s in schemes]
    L, K = realization.L, realization.K
    acc = {s: GainAccumulator(L, K) for s in schemes}
    seq = np.random.SeedSequence(seed)
    done = 0
    redraws = 0
    while done < num_samples:
        size = min(chunk, num_samples - done)
        batch = sample_pilot_pipeline(realization, size, seq.spawn(1)[0])
        try:
            gains = {s: effective_gains(batch.precoded(s)) for s in schemes}
        except RankDeficientSample as exc:
            redraws += 1
            if redraws > max_redraws:
                raise
            log.warning("redrawing chunk at sample %d: %s", done, exc)
            continue
        for s in schemes:
            acc[s].add(gains[s])
        done += size
    return {s: acc[s].result() for s in schemes}
