"""Run the standard simulation studies and print their summary tables.

    python scripts/run_studies.py                     # every study, 200 drops each
    python scripts/run_studies.py power_vs_qos --drops 20 --out results/quick

CSV files land in ``--out``; the summary printed here is the same table that
the second CSV of each study contains.
"""
import argparse
import logging
import math
import time

from mimo_assoc.experiments import ExperimentSpec, run_experiment

STUDIES = {
    "power_vs_antennas": dict(antennas=(50, 100, 150, 200, 250, 300), qos=(1.0,)),
    "power_vs_qos": dict(antennas=(200,), qos=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0)),
    "bad_service_prob": dict(antennas=(100, 200), qos=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0)),
    "maxmin_cdf": dict(antennas=(200,), coherent=True),
    "maxmin_vs_antennas": dict(antennas=(50, 100, 200, 300)),
    "joint_tx_prob": dict(antennas=(200,), qos=(0.5, 1.0, 2.0, 3.0)),
    "association_map": dict(antennas=(200,), grid=25),
    "validate_se": dict(antennas=(100,), num_users=10, samples=100_000),
}


def fmt(value):
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.4g}"
    return str(value)


def print_table(rows, limit=40):
    if not rows:
        print("  (no rows)")
        return
    keys = list(rows[0])
    print("  " + "  ".join(keys))
    for row in rows[:limit]:
        print("  " + "  ".join(fmt(row[k]) for k in keys))
    if len(rows) > limit:
        print(f"  ... {len(rows) - limit} more rows in the summary CSV")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("studies", nargs="*", help=f"subset of {sorted(STUDIES)} (default all)")
    parser.add_argument("--drops", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)
    unknown = set(args.studies) - set(STUDIES)
    if unknown:
        parser.error(f"unknown studies {sorted(unknown)}")
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    for name in args.studies or list(STUDIES):
        kw = dict(STUDIES[name])
        if name == "validate_se":
            kw.setdefault("num_drops", min(args.drops, 5))
        spec = ExperimentSpec(name, **{"num_drops": args.drops, **kw}, seed=args.seed,
                              out=args.out, workers=args.workers)
        t0 = time.time()
        res = run_experiment(spec)
        print(f"\n{name}: {spec.num_drops} drops in {time.time() - t0:.1f}s -> "
              + ", ".join(str(p) for p in res.paths))
        print_table(res.summary)


if __name__ == "__main__":
    main()
