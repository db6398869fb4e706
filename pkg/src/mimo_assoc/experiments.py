"""Batch experiments over random network drops, written as CSV.

Each experiment writes ``<out>/<name>.csv`` (one row per drop and sweep
point) and ``<out>/<name>_summary.csv`` (aggregates). Both start with a
``#`` comment line naming the experiment, the toolkit version and the seed.

Drop d of a run with seed s uses the network generated from ``(s, d)``, so
sweeps over M or QoS reuse the same user positions and shadowing.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import Scheme, SINRTargets, sinr_closed_form
from .coherent import coherent_maxmin, coherent_sinr, coherent_sinr_general
from .config import NetworkConfig
from .maxmin import maxmin_bisection, maxmin_max_snr
from .network import NetworkRealization, bs_layout, generate_network, realization_for_positions
from .oracle import monte_carlo_statistics
from .powermin import DEFAULT_THRESHOLD, max_snr_mask, solve_powermin

log = logging.getLogger(__name__)

EXPERIMENTS = ("power_vs_antennas", "power_vs_qos", "bad_service_prob", "maxmin_cdf",
               "maxmin_vs_antennas", "joint_tx_prob", "association_map", "validate_se")


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    antennas: tuple = (200,)
    qos: tuple = (1.0,)
    num_users: int = 20
    schemes: tuple = ("mrt", "zf")
    num_drops: int = 200
    seed: int = 0
    out: Path = Path("results")
    config: NetworkConfig = field(default_factory=NetworkConfig)
    delta: float = 0.01             # max-min bisection accuracy, bit/symbol
    coherent: bool = False          # add coherent joint transmission to max-min runs
    grid: int = 50                  # association map resolution per side
    samples: int = 100_000          # Monte Carlo samples per drop (validate_se)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.num_drops < 1:
            raise ValueError("num_drops must be >= 1")
        for name in ("antennas", "qos", "schemes"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s).value for s in self.schemes))
        object.__setattr__(self, "out", Path(self.out))
        if self.grid < 1 or self.samples < 2 or self.workers < 1:
            raise ValueError("grid, samples and workers must be positive (samples >= 2)")

    @property
    def network_config(self) -> NetworkConfig:
        cfg = self.config
        changes = {"num_users": self.num_users}
        if cfg.pilot_policy == "orthogonal" and cfg.pilot_length < self.num_users:
            changes["pilot_length"] = self.num_users
        return cfg.replace(**changes)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list
    summary: list
    paths: tuple = ()


def drop_network(config: NetworkConfig, seed: int, drop: int) -> NetworkRealization:
    return generate_network(config, (seed, drop))


def _hist(sets, L):
    return ";".join(str(v) for v in np.bincount([len(s) for s in sets], minlength=L + 1))


def powermin_row(real: NetworkRealization, scheme: str, qos: float, association: str) -> dict:
    """Power-min solve in the documented CSV schema (optimal or max-SNR association)."""
    targets = SINRTargets.from_rates(qos, real.config)
    allowed = max_snr_mask(real) if association == "max_snr" else None
    res = solve_powermin(real, targets, scheme, allowed=allowed)
    L = real.L
    row = {"scheme": scheme, "M": real.M, "K": real.K, "qos": qos, "association": association,
           "feasible": int(res.feasible)}
    per_bs = res.per_bs_power if res.feasible else np.full(L, np.nan)
    row.update({f"power_bs{i + 1}": float(per_bs[i]) for i in range(L)})
    row["total_power"] = res.total_power if res.feasible else math.nan
    if res.feasible:
        sets = res.association.serving_sets
        row["multi_bs_users"] = sum(len(s) > 1 for s in sets)
        row["serving_hist"] = _hist(sets, L)
    else:
        row["multi_bs_users"] = -1
        row["serving_hist"] = ""
    return row


def _points(spec: ExperimentSpec):
    if spec.experiment == "power_vs_antennas":
        return [(m, spec.qos[0]) for m in spec.antennas]
    if spec.experiment == "power_vs_qos":
        return [(spec.antennas[0], q) for q in spec.qos]
    return [(m, q) for m in spec.antennas for q in spec.qos]


def _drop_powermin(spec: ExperimentSpec, drop: int) -> list:
    base = drop_network(spec.network_config, spec.seed, drop)
    associations = ("optimal",) if spec.experiment == "joint_tx_prob" else ("optimal", "max_snr")
    rows = []
    for M, q in _points(spec):
        real = base.with_antennas(M)
        for scheme in spec.schemes:
            if scheme == "zf" and M <= real.K:
                continue
            for assoc in associations:
                rows.append({"drop": drop, **powermin_row(real, scheme, q, assoc)})
    return rows


def _drop_maxmin(spec: ExperimentSpec, drop: int) -> list:
    base = drop_network(spec.network_config, spec.seed, drop)
    antennas = spec.antennas[:1] if spec.experiment == "maxmin_cdf" else spec.antennas
    rows = []
    for M in antennas:
        real = base.with_antennas(M)
        for scheme in spec.schemes:
            if scheme == "zf" and M <= real.K:
                continue
            runs = [("optimal", lambda: maxmin_bisection(real, scheme, delta=spec.delta)),
                    ("max_snr", lambda: maxmin_max_snr(real, scheme, delta=spec.delta))]
            if spec.coherent:
                runs.append(("coherent", lambda: coherent_maxmin(real, scheme, delta=spec.delta)[0]))
            for assoc, run in runs:
                res = run()
                rows.append({"drop": drop, "scheme": scheme, "M": M, "K": real.K,
                             "association": assoc, "xi_lower": res.xi_lower,
                             "xi_upper": res.xi_upper, "iterations": res.iterations,
                             "total_power": res.total_power})
    return rows


def _drop_association_map(spec: ExperimentSpec, drop: int) -> list:
    """Probe user on every grid cell centre next to the K - 1 random users of this drop.

    The probe is the last user; its shadowing is drawn per (drop, cell).
    """
    cfg = spec.network_config.replace(antennas_per_bs=spec.antennas[0])
    rng = np.random.default_rng((spec.seed, drop, 1))
    if cfg.num_users > 1:
        others = drop_network(cfg.replace(num_users=cfg.num_users - 1), spec.seed, drop)
        fixed_users, fixed_shadow = others.user_positions, _shadow_of(others)
    else:
        fixed_users, fixed_shadow = np.zeros((0, 2)), np.zeros((cfg.num_bs, 0))
    bs = bs_layout(cfg.num_bs, cfg.square_side)
    h = cfg.square_side / 2.0
    centres = -h + (np.arange(spec.grid) + 0.5) * cfg.square_side / spec.grid
    q = spec.qos[0]
    rows = []
    for gx, x in enumerate(centres):
        for gy, y in enumerate(centres):
            probe = np.array([[x, y]])
            shadow = rng.normal(0.0, cfg.shadow_std_db, size=(cfg.num_bs, 1))
            if np.min(np.linalg.norm(bs - probe, axis=1)) < cfg.min_bs_user_distance:
                continue
            real = realization_for_positions(cfg, np.vstack([fixed_users, probe]),
                                             np.hstack([fixed_shadow, shadow]))
            for scheme in spec.schemes:
                if scheme == "zf" and real.M <= real.K:
                    continue
                res = solve_powermin(real, SINRTargets.from_rates(q, real.config), scheme)
                served = bool(res.feasible and res.rho[0, -1] > DEFAULT_THRESHOLD)
                rows.append({"drop": drop, "scheme": scheme, "ix": gx, "iy": gy, "x": x, "y": y,
                             "feasible": int(res.feasible), "served_by_bs1": int(served)})
    return rows


def _shadow_of(real: NetworkRealization) -> np.ndarray:
    """Shadowing in dB recovered from beta and the deterministic path loss."""
    cfg = real.config
    loss = cfg.pathloss_intercept_db + cfg.pathloss_slope * np.log10(real.distances())
    return 10.0 * np.log10(real.beta) + loss


def _drop_validate(spec: ExperimentSpec, drop: int) -> list:
    real = drop_network(spec.network_config, spec.seed, drop).with_antennas(spec.antennas[0])
    cfg = real.config
    rho = np.full((real.L, real.K), 1.0) * (cfg.max_powers / real.K)[:, None]
    schemes = [s for s in spec.schemes if not (s == "zf" and (real.M <= real.K or not real.orthogonal))]
    est = monte_carlo_statistics(real, schemes, spec.samples, seed=(spec.seed, drop, 2))
    rows = []
    for scheme in schemes:
        emp, se = est[Scheme(scheme)].sinr(rho, cfg.dl_noise)
        closed = sinr_closed_form(real, rho, scheme)
        coh_emp = coherent_sinr_general(est[Scheme(scheme)].stats, rho, cfg.dl_noise)
        coh = coherent_sinr(real, rho, scheme)
        for k in range(real.K):
            rows.append({"drop": drop, "scheme": scheme, "M": real.M, "K": real.K, "user": k,
                         "closed_form": closed[k], "monte_carlo": emp[k], "std_error": se[k],
                         "z_score": (emp[k] - closed[k]) / se[k],
                         "rel_error": abs(emp[k] - closed[k]) / closed[k],
                         "coherent_closed_form": coh[k], "coherent_monte_carlo": coh_emp[k]})
    return rows


_DROP_RUNNERS = {
    "power_vs_antennas": _drop_powermin,
    "power_vs_qos": _drop_powermin,
    "bad_service_prob": _drop_powermin,
    "joint_tx_prob": _drop_powermin,
    "maxmin_cdf": _drop_maxmin,
    "maxmin_vs_antennas": _drop_maxmin,
    "association_map": _drop_association_map,
    "validate_se": _drop_validate,
}


def _run_drop(args):
    spec, drop = args
    try:
        return _DROP_RUNNERS[spec.experiment](spec, drop), None
    except Exception as exc:  # noqa: BLE001 - a failed drop must not end the sweep
        return [], f"drop {drop}: {type(exc).__name__}: {exc}"


def _mean(values):
    values = [v for v in values if not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(values)) if values else math.nan


def summarize_powermin(rows: list) -> list:
    """Per (scheme, M, qos, association): infeasibility and mean power.

    ``mean_power`` averages over drops where both associations are feasible
    at that sweep point; drops where either fails are only counted in
    ``infeasible``.
    """
    by_point = {}
    for r in rows:
        by_point.setdefault((r["scheme"], r["M"], r["qos"]), {}).setdefault(r["drop"], {})[
            r["association"]] = r
    out = []
    for (scheme, M, qos), drops in sorted(by_point.items()):
        assocs = sorted({a for d in drops.values() for a in d})
        both = [d for d in drops.values() if all(d.get(a, {}).get("feasible") == 1 for a in assocs)]
        for a in assocs:
            runs = [d[a] for d in drops.values() if a in d]
            feas = [r for r in runs if r["feasible"]]
            served = sum(r["K"] for r in feas)
            multi = sum(r["multi_bs_users"] for r in feas)
            out.append({"scheme": scheme, "M": M, "qos": qos, "association": a,
                        "drops": len(runs), "infeasible": len(runs) - len(feas),
                        "bad_service_prob": (len(runs) - len(feas)) / len(runs),
                        "common_drops": len(both),
                        "mean_power": _mean([d[a]["total_power"] for d in both]),
                        "multi_bs_fraction": multi / served if served else math.nan})
    return out


def summarize_maxmin(rows: list) -> list:
    groups = {}
    for r in rows:
        groups.setdefault((r["scheme"], r["M"], r["association"]), []).append(r["xi_lower"])
    out = []
    for (scheme, M, assoc), xs in sorted(groups.items()):
        xs = np.array(xs)
        out.append({"scheme": scheme, "M": M, "association": assoc, "drops": xs.size,
                    "mean_xi": xs.mean(), "p10_xi": np.quantile(xs, 0.1),
                    "median_xi": np.median(xs), "p90_xi": np.quantile(xs, 0.9)})
    return out


def summarize_association_map(rows: list) -> list:
    groups = {}
    for r in rows:
        groups.setdefault((r["scheme"], r["ix"], r["iy"], r["x"], r["y"]), []).append(r)
    out = []
    for (scheme, ix, iy, x, y), rs in sorted(groups.items()):
        feas = [r for r in rs if r["feasible"]]
        out.append({"scheme": scheme, "ix": ix, "iy": iy, "x": x, "y": y, "drops": len(rs),
                    "feasible": len(feas),
                    "prob_bs1": _mean([r["served_by_bs1"] for r in feas])})
    return out


def summarize_validate(rows: list) -> list:
    groups = {}
    for r in rows:
        groups.setdefault(r["scheme"], []).append(r)
    return [{"scheme": s, "users": len(rs),
             "max_abs_z": max(abs(r["z_score"]) for r in rs),
             "max_rel_error": max(r["rel_error"] for r in rs),
             "max_coherent_rel_error": max(abs(r["coherent_monte_carlo"] - r["coherent_closed_form"])
                                           / r["coherent_closed_form"] for r in rs)}
            for s, rs in sorted(groups.items())]


_SUMMARIES = {
    "power_vs_antennas": summarize_powermin,
    "power_vs_qos": summarize_powermin,
    "bad_service_prob": summarize_powermin,
    "joint_tx_prob": summarize_powermin,
    "maxmin_cdf": summarize_maxmin,
    "maxmin_vs_antennas": summarize_maxmin,
    "association_map": summarize_association_map,
    "validate_se": summarize_validate,
}


def write_csv(path: Path, rows: list, comment: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        if rows:
            fields = list(rows[0])
            for r in rows[1:]:
                fields += [k for k in r if k not in fields]
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return path


def read_csv(path) -> list:
    """Rows of a CSV written by ``write_csv`` (comment line skipped, values as str)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentResult:
    jobs = [(spec, d) for d in range(spec.num_drops)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            results = list(pool.map(_run_drop, jobs))
    else:
        results = [_run_drop(j) for j in jobs]
    rows = []
    for drop_rows, err in results:       # drop-index order regardless of completion order
        if err:
            log.error("%s: %s", spec.experiment, err)
        rows.extend(drop_rows)
    summary = _SUMMARIES[spec.experiment](rows) if rows else []
    result = ExperimentResult(spec, rows, summary)
    if write:
        comment = (f"mimo_assoc {__version__} experiment={spec.experiment} seed={spec.seed} "
                   f"drops={spec.num_drops}")
        result.paths = (write_csv(spec.out / f"{spec.experiment}.csv", rows, comment),
                        write_csv(spec.out / f"{spec.experiment}_summary.csv", summary, comment))
    return result


def spec_from_dict(values: dict) -> ExperimentSpec:
    names = {f.name for f in dataclasses.fields(ExperimentSpec)}
    return ExperimentSpec(**{k: v for k, v in values.items() if k in names and v is not None})
