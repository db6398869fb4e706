"""Command line entry point.

    mimo-assoc powermin    --qos 1.0 --drops 5
    mimo-assoc maxmin      --scheme zf
    mimo-assoc coherent    --qos 1.5
    mimo-assoc validate-se --samples 20000
    mimo-assoc sweep power_vs_antennas --antennas 50 100 200 300 --drops 200

Every command accepts ``--config``, ``--seed``, ``--drops``, ``--out`` and
``--scheme`` (repeatable; both schemes by default) and writes CSV files to
``--out``.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import SINRTargets
from .coherent import coherent_maxmin, solve_coherent_powermin
from .config import NetworkConfig, load_config
from .experiments import (EXPERIMENTS, ExperimentSpec, drop_network, powermin_row,
                          run_experiment, write_csv, _hist)
from .maxmin import maxmin_bisection
from .powermin import extract_association


def _common(p: argparse.ArgumentParser, drops: int) -> None:
    p.add_argument("--config", type=Path, help="YAML file with NetworkConfig fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drops", type=int, default=drops, help="number of random network drops")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--scheme", choices=("mrt", "zf"), action="append",
                   help="precoding scheme (repeatable; default both)")
    p.add_argument("--antennas", type=int, nargs="+", help="antennas per BS (overrides config)")
    p.add_argument("--users", type=int, help="number of users (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimo-assoc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("powermin", help="minimum total power, optimal vs. max-SNR association")
    _common(p, 1)
    p.add_argument("--qos", type=float, default=1.0, help="per-user SE target, bit/symbol")

    p = sub.add_parser("maxmin", help="max-min QoS by bisection")
    _common(p, 1)
    p.add_argument("--delta", type=float, default=0.01)

    p = sub.add_parser("coherent", help="coherent joint transmission: power-min and max-min")
    _common(p, 1)
    p.add_argument("--qos", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.01)

    p = sub.add_parser("validate-se", help="closed-form SINR vs. Monte Carlo")
    _common(p, 1)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("sweep", help="run one experiment over many drops")
    p.add_argument("experiment", choices=EXPERIMENTS)
    _common(p, 200)
    p.add_argument("--qos", type=float, nargs="+", default=[1.0])
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--coherent", action="store_true", help="include coherent max-min")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _config(args) -> NetworkConfig:
    cfg = load_config(args.config) if args.config else NetworkConfig()
    changes = {}
    if args.users:
        changes["num_users"] = args.users
        if cfg.pilot_policy == "orthogonal" and cfg.pilot_length < args.users:
            changes["pilot_length"] = args.users
    if args.antennas:
        changes["antennas_per_bs"] = args.antennas[0]
    return cfg.replace(**changes) if changes else cfg


def _schemes(args):
    return tuple(dict.fromkeys(args.scheme)) if args.scheme else ("mrt", "zf")


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.4g}"
    return str(v)


def _print(rows, keys) -> None:
    print("  ".join(keys))
    for r in rows:
        print("  ".join(_fmt(r.get(k, "")) for k in keys))


def cmd_powermin(args) -> int:
    cfg = _config(args)
    rows = []
    for d in range(args.drops):
        real = drop_network(cfg, args.seed, d)
        for scheme in _schemes(args):
            for assoc in ("optimal", "max_snr"):
                rows.append({"seed": args.seed, "drop": d, **powermin_row(real, scheme, args.qos, assoc)})
    path = write_csv(args.out / "powermin.csv", rows, f"mimo_assoc {__version__} powermin")
    _print(rows, ["drop", "scheme", "association", "feasible", "total_power", "multi_bs_users"])
    print(f"wrote {path}")
    return 0


def cmd_maxmin(args) -> int:
    cfg = _config(args)
    rows = []
    for d in range(args.drops):
        real = drop_network(cfg, args.seed, d)
        for scheme in _schemes(args):
            res = maxmin_bisection(real, scheme, delta=args.delta)
            rows.append({"seed": args.seed, "drop": d, "scheme": scheme, "M": real.M, "K": real.K,
                         "xi_lower": res.xi_lower, "iterations": res.iterations,
                         "total_power": res.total_power})
    path = write_csv(args.out / "maxmin.csv", rows, f"mimo_assoc {__version__} maxmin")
    _print(rows, ["drop", "scheme", "xi_lower", "iterations", "total_power"])
    print(f"wrote {path}")
    return 0


def cmd_coherent(args) -> int:
    cfg = _config(args)
    rows = []
    for d in range(args.drops):
        real = drop_network(cfg, args.seed, d)
        for scheme in _schemes(args):
            res = solve_coherent_powermin(real, SINRTargets.from_rates(args.qos, cfg), scheme)
            mm, _ = coherent_maxmin(real, scheme, delta=args.delta)
            per_bs = res.rho.sum(axis=1) if res.feasible else np.full(real.L, np.nan)
            row = {"seed": args.seed, "drop": d, "scheme": f"coherent-{scheme.upper()}",
                   "M": real.M, "K": real.K, "qos": args.qos, "feasible": int(res.feasible),
                   "status": res.status.value}
            row.update({f"power_bs{i + 1}": float(per_bs[i]) for i in range(real.L)})
            row["total_power"] = res.total_power if res.feasible else math.nan
            row["serving_hist"] = _hist(extract_association(res.rho), real.L) if res.feasible else ""
            row["maxmin_xi_lower"] = mm.xi_lower
            rows.append(row)
    path = write_csv(args.out / "coherent.csv", rows, f"mimo_assoc {__version__} coherent")
    _print(rows, ["drop", "scheme", "status", "total_power", "maxmin_xi_lower"])
    print(f"wrote {path}")
    return 0


def _spec(args, experiment, **extra) -> ExperimentSpec:
    cfg = _config(args)
    return ExperimentSpec(experiment=experiment, antennas=tuple(args.antennas or (cfg.antennas_per_bs,)),
                          num_users=cfg.num_users, schemes=_schemes(args), num_drops=args.drops,
                          seed=args.seed, out=args.out, config=cfg, **extra)


def cmd_validate(args) -> int:
    res = run_experiment(_spec(args, "validate_se", samples=args.samples))
    _print(res.summary, ["scheme", "users", "max_abs_z", "max_rel_error", "max_coherent_rel_error"])
    print("wrote " + ", ".join(str(p) for p in res.paths))
    return 0


def cmd_sweep(args) -> int:
    res = run_experiment(_spec(args, args.experiment, qos=tuple(args.qos), delta=args.delta,
                               coherent=args.coherent, grid=args.grid, samples=args.samples,
                               workers=args.workers))
    print(f"{args.experiment}: {len(res.rows)} rows, {len(res.summary)} summary rows")
    print("wrote " + ", ".join(str(p) for p in res.paths))
    return 0


COMMANDS = {"powermin": cmd_powermin, "maxmin": cmd_maxmin, "coherent": cmd_coherent,
            "validate-se": cmd_validate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.drops < 1:
        print("error: --drops must be >= 1", file=sys.stderr)
        return 2
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
