"""Pyramid utility and delay as the per-replica search budget alpha grows.

Runs only pyramid and the strongest utility baseline on the gate config,
so the gap between them can be read off per alpha.

    python3 scripts/alpha_sensitivity.py --alphas 1 3 8 32 --seeds 1
"""

import argparse

import numpy as np

from pyramid_sim.config import load_config
from pyramid_sim.harness import simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default="configs/gate.yaml")
    ap.add_argument("--alphas", type=int, nargs="+", default=[1, 3, 8, 32])
    ap.add_argument("--seeds", type=int, nargs="+", default=None)
    ap.add_argument("--baseline", default="cluster")
    args = ap.parse_args()
    base = load_config(args.config)
    seeds = tuple(args.seeds) if args.seeds else base.seeds

    print(f"{'alpha':>5} {'r':>3} {'pyramid util':>13} {args.baseline + ' util':>13} {'ratio':>6} {'delay':>7}")
    for alpha in args.alphas:
        cfg = base.with_overrides(alpha=alpha, strategies=("pyramid", args.baseline), seeds=seeds)
        rows = [row for s in seeds for row in simulate(cfg, s).rows]
        for r in cfg.replication_degrees:
            def mean(strategy, col):
                return np.nanmean([x[col] for x in rows if x["strategy"] == strategy and x["r"] == r])
            pu, bu = mean("pyramid", "avg_bw_kbps"), mean(args.baseline, "avg_bw_kbps")
            print(f"{alpha:>5} {r:>3} {pu:13.1f} {bu:13.1f} {pu / bu:6.2f} {mean('pyramid', 'avg_delay_ms'):7.1f}")


if __name__ == "__main__":
    main()
