"""Network configuration and unit helpers.

All powers and variances are stored in Watts. dBm only appears at the
I/O boundary (config files, CLI flags).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import yaml

FloatOrSeq = Union[float, Sequence[float]]


class ConfigError(ValueError):
    pass


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Multi-cell Massive MIMO downlink setup.

    Defaults reproduce the desk-scale version of the simulation setup: four
    BSs at the corners of a 1 km square, 20 users, 200-symbol coherence
    blocks, -96 dBm noise, 7 dB shadowing and 200 mW pilots.
    """

    num_bs: int = 4                         # L
    antennas_per_bs: int = 200              # M
    num_users: int = 20                     # K
    coherence_length: int = 200             # tau_c, symbols
    pilot_length: int = 20                  # tau_p, symbols
    dl_fraction: float = 1.0                # gamma_DL in (0, 1]
    square_side: float = 1.0                # km
    min_bs_user_distance: float = 0.1       # km
    shadow_std_db: float = 7.0              # dB
    pathloss_intercept_db: float = 148.1    # dB at 1 km
    pathloss_slope: float = 37.6            # dB per decade
    pilot_power: FloatOrSeq = 0.2           # W, scalar or per user
    ul_noise: float = dbm_to_watt(-96.0)    # W
    dl_noise: float = dbm_to_watt(-96.0)    # W
    amp_efficiency: FloatOrSeq = 1.0        # Delta_i, scalar or per BS
    max_power: FloatOrSeq = 40.0            # W, scalar or per BS
    pilot_policy: str = "orthogonal"        # orthogonal | round_robin

    def __post_init__(self):
        for name in ("pilot_power", "amp_efficiency", "max_power"):
            value = getattr(self, name)
            if not np.isscalar(value):
                object.__setattr__(self, name, tuple(float(v) for v in value))
        self.validate()

    def validate(self) -> None:
        L, M, K = self.num_bs, self.antennas_per_bs, self.num_users
        if L < 1 or M < 1 or K < 1:
            raise ConfigError(f"need L, M, K >= 1, got {L}, {M}, {K}")
        if not 1 <= self.pilot_length <= self.coherence_length:
            raise ConfigError("need 1 <= pilot_length <= coherence_length")
        if not 0.0 < self.dl_fraction <= 1.0:
            raise ConfigError("dl_fraction must lie in (0, 1]")
        if self.pilot_policy not in ("orthogonal", "round_robin"):
            raise ConfigError(f"unknown pilot policy {self.pilot_policy!r}")
        if self.pilot_policy == "orthogonal" and self.pilot_length < K:
            raise ConfigError("orthogonal pilots need pilot_length >= num_users")
        if self.ul_noise <= 0 or self.dl_noise <= 0:
            raise ConfigError("noise variances must be positive")
        if np.any(self.pilot_powers <= 0):
            raise ConfigError("pilot powers must be positive")
        if np.any(self.max_powers <= 0):
            raise ConfigError("max powers must be positive")
        if np.any(self.amp_efficiencies < 1.0):
            raise ConfigError("amplifier efficiency factors must be >= 1")
        if self.square_side <= 0 or self.min_bs_user_distance < 0:
            raise ConfigError("geometry lengths must be positive")
        if self.min_bs_user_distance >= self.square_side:
            raise ConfigError("min_bs_user_distance must be below square_side")
        if self.shadow_std_db < 0:
            raise ConfigError("shadow_std_db must be nonnegative")

    def _broadcast(self, value, n, name):
        arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)) if np.isscalar(value) \
            else np.asarray(value, dtype=float)
        if arr.shape != (n,):
            raise ConfigError(f"{name} needs {n} entries, got {arr.shape}")
        return arr.copy()

    @property
    def pilot_powers(self) -> np.ndarray:
        return self._broadcast(self.pilot_power, self.num_users, "pilot_power")

    @property
    def amp_efficiencies(self) -> np.ndarray:
        return self._broadcast(self.amp_efficiency, self.num_bs, "amp_efficiency")

    @property
    def max_powers(self) -> np.ndarray:
        return self._broadcast(self.max_power, self.num_bs, "max_power")

    @property
    def prelog(self) -> float:
        """gamma_DL * (1 - tau_p / tau_c)."""
        return self.dl_fraction * (1.0 - self.pilot_length / self.coherence_length)

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


def load_config(path: str | Path, **overrides) -> NetworkConfig:
    """Read a YAML key/value file whose keys are NetworkConfig field names.

    Noise entries may alternatively be given in dBm as ``ul_noise_dbm`` /
    ``dl_noise_dbm``.
    """
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    for key in ("ul_noise", "dl_noise"):
        dbm = raw.pop(f"{key}_dbm", None)
        if dbm is not None:
            raw[key] = dbm_to_watt(float(dbm))
    known = {f.name for f in dataclasses.fields(NetworkConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return NetworkConfig(**raw)
