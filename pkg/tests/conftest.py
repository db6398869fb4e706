import json
import sys
from pathlib import Path

import numpy as np
import pytest

from mimo_assoc.config import NetworkConfig
from mimo_assoc.network import NetworkRealization

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).resolve().parents[1]

# scripts/ holds the offline oracles; tests import them for live cross-checks
sys.path.insert(0, str(ROOT / "scripts"))

SIGMA2 = 2.512e-13  # the rounded noise figure used by the worked examples

ACCEPTANCE_LINES: list[str] = []


def reference_values() -> dict:
    return {k: float(v) for k, v in json.loads((DATA / "reference_values.json").read_text()).items()}


@pytest.fixture(scope="session")
def ref():
    return reference_values()


def single_link(M=100, beta=1e-10, pilot_length=1, noise=SIGMA2, max_power=40.0, **cfg):
    """One BS, one user, a chosen large-scale gain."""
    config = NetworkConfig(num_bs=1, antennas_per_bs=M, num_users=1, pilot_length=pilot_length,
                           ul_noise=noise, dl_noise=noise, max_power=max_power, **cfg)
    return NetworkRealization.from_beta(config, [[beta]])


def random_realization(rng, L=2, K=4, M=32, policy="orthogonal", pilot_length=None, **cfg):
    """Random large-scale fading in a realistic range (-140..-90 dB)."""
    tau = pilot_length or (K if policy == "orthogonal" else max(1, K // 2))
    config = NetworkConfig(num_bs=L, antennas_per_bs=M, num_users=K, pilot_length=tau,
                           pilot_policy=policy, **cfg)
    beta = 10.0 ** rng.uniform(-14.0, -9.0, size=(L, K))
    return NetworkRealization.from_beta(config, beta)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))
