"""Network geometry, large-scale fading, pilot reuse and MMSE estimation quality."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .config import ConfigError, NetworkConfig


class GenerationError(RuntimeError):
    pass


PilotSets = tuple  # tuple[tuple[int, ...], ...], users are 0-based


def path_loss_db(distance, intercept_db: float = 148.1, slope: float = 37.6):
    """Path loss in dB at ``distance`` km."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = intercept_db + slope * np.log10(d)
    return float(out) if out.ndim == 0 else out


def assign_pilots(num_users: int, pilot_length: int, policy: str = "orthogonal") -> PilotSets:
    """Pilot reuse sets P_k (0-based user indices, each set contains k itself)."""
    if policy == "orthogonal":
        if pilot_length < num_users:
            raise ConfigError(
                f"orthogonal pilots need pilot_length >= num_users ({pilot_length} < {num_users})")
        return tuple((k,) for k in range(num_users))
    if policy == "round_robin":
        return tuple(
            tuple(t for t in range(num_users) if t % pilot_length == k % pilot_length)
            for k in range(num_users))
    raise ConfigError(f"unknown pilot policy {policy!r}")


def sharing_matrix(pilot_sets: PilotSets) -> np.ndarray:
    """Boolean K x K matrix, entry [k, t] is True iff t is in P_k."""
    K = len(pilot_sets)
    share = np.zeros((K, K), dtype=bool)
    for k, members in enumerate(pilot_sets):
        share[k, list(members)] = True
    return share


def check_pilot_sets(pilot_sets: PilotSets) -> None:
    share = sharing_matrix(pilot_sets)
    if not np.all(np.diag(share)):
        raise ConfigError("every user must belong to its own pilot set")
    if not np.array_equal(share, share.T):
        raise ConfigError("pilot sets are not symmetric")


def estimation_quality(beta, pilot_powers, pilot_sets: PilotSets, pilot_length: int,
                       ul_noise: float) -> np.ndarray:
    """Variance of the MMSE channel estimate, theta[l, k].

    theta = p_k tau_p beta_lk^2 / (tau_p sum_{t in P_k} p_t beta_lt + sigma_UL^2)
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("beta entries must be positive")
    p = np.broadcast_to(np.asarray(pilot_powers, dtype=float), (beta.shape[1],))
    share = sharing_matrix(pilot_sets).astype(float)
    received = pilot_length * (beta * p) @ share.T + ul_noise    # [l, k]
    return p * pilot_length * beta ** 2 / received


def bs_layout(num_bs: int, side: float) -> np.ndarray:
    """BS coordinates evenly spaced along the square boundary.

    The square is centered at the origin and the walk starts at the
    (side/2, side/2) corner going counter-clockwise, so four BSs sit exactly
    on the four corners.
    """
    h = side / 2.0
    corners = np.array([[h, h], [-h, h], [-h, -h], [h, -h]])
    perimeter = 4.0 * side
    pos = []
    for l in range(num_bs):
        s = perimeter * l / num_bs
        edge, frac = int(s // side) % 4, (s % side) / side
        a, b = corners[edge], corners[(edge + 1) % 4]
        pos.append(a + frac * (b - a))
    return np.array(pos)


@dataclass(frozen=True)
class NetworkRealization:
    config: NetworkConfig
    bs_positions: np.ndarray
    user_positions: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    pilot_sets: PilotSets
    seed: int | None = None
    _share: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_share", sharing_matrix(self.pilot_sets))

    @classmethod
    def from_beta(cls, config: NetworkConfig, beta, pilot_sets: PilotSets | None = None,
                  bs_positions=None, user_positions=None, seed=None) -> "NetworkRealization":
        """Build a realization from a given large-scale fading matrix."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (config.num_bs, config.num_users):
            raise ConfigError(f"beta has shape {beta.shape}, expected "
                              f"{(config.num_bs, config.num_users)}")
        if pilot_sets is None:
            pilot_sets = assign_pilots(config.num_users, config.pilot_length, config.pilot_policy)
        check_pilot_sets(pilot_sets)
        theta = estimation_quality(beta, config.pilot_powers, pilot_sets,
                                   config.pilot_length, config.ul_noise)
        L, K = beta.shape
        bs = np.full((L, 2), np.nan) if bs_positions is None else np.asarray(bs_positions, float)
        users = np.full((K, 2), np.nan) if user_positions is None else np.asarray(user_positions, float)
        return cls(config, bs, users, beta, theta, tuple(tuple(s) for s in pilot_sets), seed)

    @property
    def L(self) -> int:
        return self.beta.shape[0]

    @property
    def K(self) -> int:
        return self.beta.shape[1]

    @property
    def M(self) -> int:
        return self.config.antennas_per_bs

    @property
    def sharing(self) -> np.ndarray:
        """[k, t] True iff t in P_k."""
        return self._share.copy()

    @property
    def contamination(self) -> np.ndarray:
        """[k, t] True iff t in P_k minus {k}."""
        return self._share & ~np.eye(self.K, dtype=bool)

    @property
    def orthogonal(self) -> bool:
        return not self.contamination.any()

    def with_antennas(self, antennas: int) -> "NetworkRealization":
        """Same drop with a different array size (beta, theta do not depend on M)."""
        return replace(self, config=self.config.replace(antennas_per_bs=antennas))

    def with_config(self, **changes) -> "NetworkRealization":
        """Same geometry and beta, recomputing theta for the modified config."""
        cfg = self.config.replace(**changes)
        return NetworkRealization.from_beta(cfg, self.beta, self.pilot_sets,
                                            self.bs_positions, self.user_positions, self.seed)

    def distances(self) -> np.ndarray:
        """[l, k] BS-user distances in km."""
        diff = self.bs_positions[:, None, :] - self.user_positions[None, :, :]
        return np.linalg.norm(diff, axis=-1)


def _drop_users(rng: np.random.Generator, bs: np.ndarray, config: NetworkConfig) -> np.ndarray:
    K = config.num_users
    h = config.square_side / 2.0
    budget = 10 * K
    users = np.empty((K, 2))
    for k in range(K):
        for _ in range(budget):
            cand = rng.uniform(-h, h, size=2)
            if np.min(np.linalg.norm(bs - cand, axis=1)) >= config.min_bs_user_distance:
                users[k] = cand
                break
        else:
            raise GenerationError(
                f"could not place user {k} within {budget} attempts; "
                f"min distance {config.min_bs_user_distance} km too large for the square")
    return users


def generate_network(config: NetworkConfig, seed: int) -> NetworkRealization:
    """Random drop: uniform users in the square, log-normal shadowing per link."""
    rng = np.random.default_rng(seed)
    bs = bs_layout(config.num_bs, config.square_side)
    users = _drop_users(rng, bs, config)
    dist = np.linalg.norm(bs[:, None, :] - users[None, :, :], axis=-1)
    shadow = rng.normal(0.0, config.shadow_std_db, size=dist.shape) if config.shadow_std_db > 0 \
        else np.zeros_like(dist)
    loss = path_loss_db(dist, config.pathloss_intercept_db, config.pathloss_slope)
    beta = 10.0 ** ((-loss + shadow) / 10.0)
    pilots = assign_pilots(config.num_users, config.pilot_length, config.pilot_policy)
    return NetworkRealization.from_beta(config, beta, pilots, bs, users, seed)


def best_bs(realization: NetworkRealization) -> np.ndarray:
    """Index of the strongest average link (max-SNR BS) for each user."""
    return np.argmax(realization.beta, axis=0)


def realization_for_positions(config: NetworkConfig, users: Sequence, shadow_db=None,
                              pilot_sets: PilotSets | None = None) -> NetworkRealization:
    """Deterministic realization for explicit user positions (shadowing optional)."""
    bs = bs_layout(config.num_bs, config.square_side)
    users = np.asarray(users, dtype=float).reshape(-1, 2)
    dist = np.linalg.norm(bs[:, None, :] - users[None, :, :], axis=-1)
    loss = path_loss_db(dist, config.pathloss_intercept_db, config.pathloss_slope)
    z = 0.0 if shadow_db is None else np.asarray(shadow_db, dtype=float)
    beta = 10.0 ** ((-loss + z) / 10.0)
    return NetworkRealization.from_beta(config.replace(num_users=users.shape[0]), beta,
                                        pilot_sets, bs, users)
