"""Run the desk-scale directional comparison and print per-seed means.

    python3 scripts/run_gate.py [--config configs/gate.yaml] [--out results/gate]
"""

import argparse
from pathlib import Path
from collections import defaultdict

import numpy as np

from pyramid_sim.config import load_config
from pyramid_sim.harness import simulate, write_run


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default="configs/gate.yaml")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = load_config(args.config)
    out = cfg.resolved_output_dir if args.out is None else args.out

    table = defaultdict(dict)
    for seed in cfg.seeds:
        result = simulate(cfg, seed)
        write_run(result, Path(out) / f"seed_{seed}")
        for strategy in cfg.strategies:
            for r in cfg.replication_degrees:
                rows = [x for x in result.rows if x["strategy"] == strategy and x["r"] == r]
                table[(strategy, r)][seed] = (np.nanmean([x["avg_bw_kbps"] for x in rows]),
                                              np.nanmean([x["avg_delay_ms"] for x in rows]))

    print(f"{'strategy':>12} {'r':>3} " + " ".join(f"seed{s:<2} util  delay" for s in cfg.seeds))
    for (strategy, r), per in sorted(table.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        cells = " ".join(f"{per[s][0]:8.1f} {per[s][1]:6.1f}" for s in cfg.seeds)
        print(f"{strategy:>12} {r:>3} {cells}")


if __name__ == "__main__":
    main()
