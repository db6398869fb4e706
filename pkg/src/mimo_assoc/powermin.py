"""Total transmit power minimisation under per-user SE targets.

The LP variables are ordered BS-major: ``x[i * K + t] = rho[i, t]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import Scheme, SINRTargets
from .lp import LinearProgram, LpSolution, kkt_residuals, solve_lp
from .network import NetworkRealization, best_bs

DEFAULT_THRESHOLD = 1e-9  # W


@dataclass(frozen=True)
class PowerMinInstance:
    """Coefficients of the power-minimisation LP.

    ``gain[i, k]`` is the array-scaled estimate quality (M theta or
    (M - K) theta), ``interference[i, k]`` the per-Watt leakage (beta or
    beta - theta). The SE constraint of user k reads

        sum_{t in P_k \\ k} gain_k . rho_t + sum_t interference_k . rho_t
            - gain_k . rho_k / xi_hat_k + noise <= 0
    """
    scheme: Scheme
    gain: np.ndarray
    interference: np.ndarray
    xi_hat: np.ndarray
    delta: np.ndarray
    p_max: np.ndarray
    noise: float
    contamination: np.ndarray

    @classmethod
    def from_realization(cls, realization: NetworkRealization, targets: SINRTargets, scheme,
                         delta=None, p_max=None, noise: float | None = None) -> "PowerMinInstance":
        scheme = Scheme.parse(scheme)
        cfg = realization.config
        M, K = realization.M, realization.K
        theta, beta = realization.theta, realization.beta
        if scheme is Scheme.MRT:
            gain, interf = M * theta, beta
        else:
            if M <= K:
                raise ValueError(f"ZF needs M >= K + 1 (M={M}, K={K})")
            gain, interf = (M - K) * theta, beta - theta
        xi_hat = np.asarray(targets.xi_hat, dtype=float)
        if xi_hat.shape != (K,) or not np.all(np.isfinite(xi_hat)) or np.any(xi_hat < 0):
            raise ValueError("SINR targets must be K finite nonnegative values")
        delta = cfg.amp_efficiencies if delta is None else np.broadcast_to(
            np.asarray(delta, float), (realization.L,)).copy()
        p_max = cfg.max_powers if p_max is None else np.broadcast_to(
            np.asarray(p_max, float), (realization.L,)).copy()
        noise = cfg.dl_noise if noise is None else float(noise)
        return cls(scheme, gain, interf, xi_hat, delta, p_max, noise, realization.contamination)

    @property
    def L(self) -> int:
        return self.gain.shape[0]

    @property
    def K(self) -> int:
        return self.gain.shape[1]

    def b_vectors(self) -> np.ndarray:
        """b[i, k] = gain[i, k] / xi_hat[k] (inf where the target is zero)."""
        with np.errstate(divide="ignore"):
            return self.gain / self.xi_hat[None, :]

    def qos_residual(self, rho) -> np.ndarray:
        """Left-hand side of each SE row multiplied by xi_hat (<= 0 when met)."""
        rho = np.asarray(rho, dtype=float)
        C = self.contamination.astype(float)
        pilot = np.einsum("ik,it,kt->k", self.gain, rho, C)
        other = np.einsum("ik,it->k", self.interference, rho)
        own = np.sum(self.gain * rho, axis=0)
        return self.xi_hat * (pilot + other + self.noise) - own


def build_powermin_lp(instance: PowerMinInstance, allowed=None) -> tuple[LinearProgram, dict]:
    """Assemble the LP and the row scalings needed to recover multipliers.

    SE row k is stored multiplied by ``xi_hat_k / noise`` so that
    coefficients are O(1) and zero targets stay finite. Power rows with an
    infinite budget are dropped. ``allowed`` (L x K bool) pins the
    remaining variables to zero by giving them a ``<= 0`` row.
    """
    L, K = instance.L, instance.K
    n = L * K
    sigma2 = instance.noise
    C = instance.contamination.astype(float)
    rows, rhs, kinds = [], [], []
    for k in range(K):
        coef = np.zeros((L, K))
        coef += instance.interference[:, k][:, None]
        coef += instance.gain[:, k][:, None] * C[k][None, :]
        coef *= instance.xi_hat[k]
        coef[:, k] -= instance.gain[:, k]
        rows.append((coef / sigma2).ravel())
        rhs.append(-instance.xi_hat[k])
        kinds.append(("qos", k, instance.xi_hat[k] / sigma2))
    for i in range(L):
        if np.isfinite(instance.p_max[i]):
            coef = np.zeros((L, K))
            coef[i] = 1.0
            rows.append(coef.ravel())
            rhs.append(instance.p_max[i])
            kinds.append(("power", i, 1.0))
    if allowed is not None:
        blocked = ~np.asarray(allowed, dtype=bool)
        for idx in np.flatnonzero(blocked.ravel()):
            e = np.zeros(n)
            e[idx] = 1.0
            rows.append(e)
            rhs.append(0.0)
            kinds.append(("pin", int(idx), 1.0))
    c = np.repeat(instance.delta, K)
    lp = LinearProgram(c, np.array(rows).reshape(len(rows), n), np.array(rhs))
    return lp, {"rows": kinds}


@dataclass(frozen=True)
class AssociationResult:
    serving_sets: tuple
    lam: np.ndarray          # K, >= 0, SE-row multipliers in original units
    mu: np.ndarray           # L, >= 0, power-row multipliers
    rule_scores: np.ndarray  # L x K


@dataclass(frozen=True)
class PowerMinResult:
    feasible: bool
    rho: np.ndarray | None
    total_power: float
    association: AssociationResult | None
    instance: PowerMinInstance
    lp: LinearProgram
    solution: LpSolution

    @property
    def per_bs_power(self) -> np.ndarray | None:
        return None if self.rho is None else self.rho.sum(axis=1)


def multipliers(instance: PowerMinInstance, meta: dict, duals) -> tuple[np.ndarray, np.ndarray]:
    """Map solver duals (y <= 0, scaled rows) to nonnegative lambda, mu."""
    lam = np.zeros(instance.K)
    mu = np.zeros(instance.L)
    for (kind, idx, scale), y in zip(meta["rows"], duals):
        if kind == "qos":
            lam[idx] = max(-y * scale, 0.0)
        elif kind == "power":
            mu[idx] = max(-y * scale, 0.0)
    return lam, mu


def rule_scores(instance: PowerMinInstance, lam, mu) -> np.ndarray:
    """Per-(BS, user) association score; user t is served only where it is minimal.

    score[i, t] = (Delta_i + sum_k lam_k gain[i, k] 1{t in P_k \\ k}
                   + sum_k lam_k interference[i, k] + mu_i) / b[i, t]
    """
    C = instance.contamination.astype(float)
    pilot = instance.gain @ (lam[:, None] * C)                  # [i, t]
    common = instance.delta + instance.interference @ lam + mu  # [i]
    with np.errstate(divide="ignore", invalid="ignore"):
        return (common[:, None] + pilot) / instance.b_vectors()


def extract_association(rho, threshold: float = DEFAULT_THRESHOLD) -> tuple:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    rho = np.asarray(rho, dtype=float)
    return tuple(tuple(int(i) for i in np.flatnonzero(rho[:, t] > threshold))
                 for t in range(rho.shape[1]))


def solve_powermin(realization: NetworkRealization, targets: SINRTargets, scheme,
                   delta=None, p_max=None, noise=None, allowed=None) -> PowerMinResult:
    instance = PowerMinInstance.from_realization(realization, targets, scheme, delta, p_max, noise)
    return solve_instance(instance, allowed)


def solve_instance(instance: PowerMinInstance, allowed=None) -> PowerMinResult:
    lp, meta = build_powermin_lp(instance, allowed)
    sol = solve_lp(lp)
    if not sol.optimal:
        return PowerMinResult(False, None, np.inf, None, instance, lp, sol)
    rho = sol.x.reshape(instance.L, instance.K)
    if allowed is not None:
        rho = np.where(allowed, rho, 0.0)
    lam, mu = multipliers(instance, meta, sol.duals)
    assoc = AssociationResult(extract_association(rho), lam, mu, rule_scores(instance, lam, mu))
    total = float(np.sum(instance.delta[:, None] * rho))
    return PowerMinResult(True, rho, total, assoc, instance, lp, sol)


def max_snr_mask(realization: NetworkRealization) -> np.ndarray:
    mask = np.zeros((realization.L, realization.K), dtype=bool)
    mask[best_bs(realization), np.arange(realization.K)] = True
    return mask


def max_snr_baseline(realization: NetworkRealization, targets: SINRTargets, scheme,
                     **kwargs) -> PowerMinResult:
    """Power minimisation with each user tied to its strongest-average-gain BS."""
    return solve_powermin(realization, targets, scheme, allowed=max_snr_mask(realization), **kwargs)


@dataclass(frozen=True)
class RuleReport:
    ok: bool
    scores: np.ndarray
    minima: np.ndarray
    violations: list
    max_relative_gap: float


def association_rule_check(instance: PowerMinInstance, lam, mu, rho, tol: float = 1e-6,
                           threshold: float = DEFAULT_THRESHOLD) -> RuleReport:
    """Check that every serving BS attains its user's minimal score.

    Users with a zero SE target are skipped (their b vector is infinite).
    """
    rho = np.asarray(rho, dtype=float)
    scores = rule_scores(instance, np.asarray(lam, float), np.asarray(mu, float))
    minima = np.full(instance.K, np.nan)
    violations = []
    worst = 0.0
    for t in range(instance.K):
        if instance.xi_hat[t] <= 0:
            continue
        minima[t] = np.min(scores[:, t])
        for i in np.flatnonzero(rho[:, t] > threshold):
            gap = (scores[i, t] - minima[t]) / abs(minima[t])
            worst = max(worst, gap)
            if gap > tol:
                violations.append((int(i), int(t), float(gap)))
    return RuleReport(not violations, scores, minima, violations, worst)


def powermin_kkt(result: PowerMinResult) -> dict:
    return kkt_residuals(result.lp, result.solution)
