"""Command line entry point: run, sweep, report, validate."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .harness import run_scenario, sweep
from .metrics import aggregate_report, read_slot_csv, write_summary
from .rwd import PlanError

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _csv_list(conv):
    def parse(text: str):
        try:
            return tuple(conv(v) for v in text.split(",") if v.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pyramid-sim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("config", help="YAML scenario file")
        sp.add_argument("--seed", type=int, action="append", help="seed(s); repeatable")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--strategies", type=_csv_list(str), help="comma-separated strategy names")
        sp.add_argument("--degrees", type=_csv_list(int), help="comma-separated replication degrees")

    overrides(sub.add_parser("run", help="simulate one seed"))
    sw = sub.add_parser("sweep", help="simulate every seed and merge summaries")
    overrides(sw)
    sw.add_argument("--workers", type=int, default=1)
    rp = sub.add_parser("report", help="re-aggregate per-slot CSVs in a results directory")
    rp.add_argument("results_dir")
    overrides(sub.add_parser("validate", help="check a config file"))
    return p


def _load(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seeds=tuple(args.seed) if args.seed else None, output_dir=args.out,
                              strategies=args.strategies, replication_degrees=args.degrees)


def _report(results_dir: Path) -> list[dict]:
    files = [results_dir / "slots.csv"] if (results_dir / "slots.csv").exists() else \
        sorted(results_dir.glob("seed_*/slots.csv"))
    if not files:
        raise ConfigError(f"no slots.csv under {results_dir}")
    rows = [row for f in files for row in read_slot_csv(f)]
    summary = aggregate_report(rows)
    write_summary(summary, results_dir / "report_summary.csv")
    return summary


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            summary = _report(Path(args.results_dir))
            for row in summary:
                print(f"{row['strategy']:>12} r={row['r']:<3} {row['metric']:<8} "
                      f"mean={row['mean']:.4f} sd={row['stddev']:.4f} n={row['n_samples']}")
            return EXIT_OK
        cfg = _load(args)
        if args.command == "validate":
            print(f"ok: n={cfg.n} vs_size={cfg.effective_vs_size} slots={cfg.num_slots} "
                  f"strategies={','.join(cfg.strategies)} degrees={list(cfg.replication_degrees)}")
            return EXIT_OK
        if args.command == "run":
            _, summary = run_scenario(cfg)
        else:
            summary = sweep(cfg, workers=args.workers)
        print(f"wrote {len(summary)} summary rows to {cfg.resolved_output_dir}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlanError as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
