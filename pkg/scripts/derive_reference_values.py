"""Evaluate scalar reference values in 50-digit decimal arithmetic.

The results are frozen to ``tests/data/reference_values.json`` and the test
suite compares the float64 implementation against them. Nothing here
imports the package, so the numbers are independent of its code paths.

    python3 scripts/derive_reference_values.py
"""
from __future__ import annotations

import json
from decimal import Decimal as D, getcontext
from pathlib import Path

getcontext().prec = 50

LN2 = D(2).ln()


def log2(x: D) -> D:
    return x.ln() / LN2


def log10(x: D) -> D:
    return x.log10()


def main() -> None:
    p, tau_p, beta, sigma2 = D("0.2"), D(1), D("1e-10"), D("2.512e-13")
    theta = p * tau_p * beta ** 2 / (tau_p * p * beta + sigma2)

    # the stated single-user example, rounded inputs
    M, rho, theta_r = D(100), D("7.87e-5"), D("9.876e-11")
    sinr = M * rho * theta_r / (rho * beta + sigma2)

    xi_hat = D(3)
    rho_star = xi_hat * sigma2 / (M * theta_r - xi_hat * beta)

    prelog = D(1) * (1 - D(20) / D(200))
    values = {
        "theta_single_user": theta,
        "mrt_sinr_single_user": sinr,
        "rho_star_single_user": rho_star,
        "rate_at_unit_sinr": prelog * log2(D(2)),
        "xi0_mrt_M200": prelog * log2(D(201)),
        "path_loss_1km": D("148.1") + D("37.6") * log10(D(1)),
        "path_loss_100m": D("148.1") + D("37.6") * log10(D("0.1")),
        "beta_1km_no_shadow": D(10) ** (-(D("148.1")) / 10),
        "dbm_minus96_watt": D(10) ** ((D(-96) - 30) / 10),
    }
    # saturation point of the single-BS single-user max-min problem
    # (one user, tau_p = 20, beta = 1e-10, M = 200, P_max = 1 mW)
    tp = D(20)
    theta20 = p * tp * beta ** 2 / (tp * p * beta + sigma2)
    values["theta_single_user_tau20"] = theta20
    P, M2 = D("0.001"), D(200)
    snr_sat = M2 * theta20 * P / (P * beta + sigma2)
    values["saturation_sinr_M200_P1mW"] = snr_sat
    values["saturation_rate_M200_P1mW"] = prelog * log2(1 + snr_sat)

    out = Path(__file__).resolve().parents[1] / "tests" / "data" / "reference_values.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({k: str(v) for k, v in values.items()}, indent=1) + "\n")
    for k, v in values.items():
        print(f"{k:28s} {float(v):.15g}")


if __name__ == "__main__":
    main()
