"""Max-min QoS with and without coherent joint transmission on the same drops.

Prints the per-drop max-min rates and the mean relative gain of coherent
transmission for each precoding scheme.

    python scripts/coherent_gain.py --drops 20 --antennas 200
"""
import argparse

import numpy as np

from mimo_assoc.coherent import coherent_maxmin
from mimo_assoc.config import NetworkConfig
from mimo_assoc.experiments import drop_network
from mimo_assoc.maxmin import maxmin_bisection


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--drops", type=int, default=20)
    parser.add_argument("--antennas", type=int, default=200)
    parser.add_argument("--users", type=int, default=20)
    parser.add_argument("--seed", type=int, default=700)
    parser.add_argument("--delta", type=float, default=0.01)
    args = parser.parse_args(argv)

    cfg = NetworkConfig(antennas_per_bs=args.antennas, num_users=args.users,
                        pilot_length=max(args.users, NetworkConfig().pilot_length))
    gains = {"mrt": [], "zf": []}
    print("drop scheme  non-coherent  coherent  gain")
    for d in range(args.drops):
        real = drop_network(cfg, args.seed, d)
        for scheme in gains:
            nc = maxmin_bisection(real, scheme, delta=args.delta).xi_lower
            coh = coherent_maxmin(real, scheme, delta=args.delta)[0].xi_lower
            gains[scheme].append((coh - nc) / nc)
            print(f"{d:4d} {scheme:6s} {nc:12.4f} {coh:9.4f} {gains[scheme][-1]:6.1%}")
    for scheme, g in gains.items():
        print(f"{scheme.upper()}: mean gain {np.mean(g):.1%}, median {np.median(g):.1%}")


if __name__ == "__main__":
    main()
