"""Discrete-time simulation loop, degree/strategy sweeps and result files."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import replicate
from .config import STRATEGIES, ScenarioConfig
from .metrics import aggregate_report, plan_timeseries, write_slot_csv, write_summary
from .pyramid import ReplicationPlan
from .rwd import PlanError
from .world import PIGGYBACK, STRATEGY, SimState, build_world, piggyback_budget, simulate_piggyback, stream

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    seed: int
    rows: list[dict]
    plans: dict[tuple[str, int], list[ReplicationPlan]]
    world: SimState
    isolation_hashes: dict[tuple[str, int], str] = field(default_factory=dict)
    ledgers: dict[tuple[str, int], dict] = field(default_factory=dict)


def learn(world: SimState) -> None:
    """Learning phase: per-cycle utility reports plus piggybacked searches."""
    cfg = world.cfg
    rng = stream(world.seed, PIGGYBACK)
    for s in range(cfg.learning_slots):
        world.advance_to(s)
        world.report_phase()
        n_online = int(world.online[:, s].sum())
        simulate_piggyback(world, s, piggyback_budget(cfg, n_online), rng)


def place_plans(world: SimState) -> tuple[dict, dict, dict]:
    """Every owner places one plan per (strategy, degree) on an isolated copy of the world."""
    cfg = world.cfg
    plans, hashes, ledgers = {}, {}, {}
    for r in cfg.replication_degrees:
        shared = world.clone() if cfg.shared_world else None
        for strategy in cfg.strategies:
            w = shared if shared is not None else world.clone()
            hashes[(strategy, r)] = w.snapshot_hash()
            rng = stream(world.seed, STRATEGY, STRATEGIES.index(strategy), r)
            out = []
            for owner in world.owners:
                try:
                    plan = replicate(strategy, int(owner), r, w, rng)
                except PlanError as exc:
                    log.warning("seed %s %s r=%s owner %s: %s", world.seed, strategy, r, owner, exc)
                    plan = ReplicationPlan(owner=int(owner), strategy=strategy, r=r, shortfall=r)
                out.append(plan)
            plans[(strategy, r)] = out
            ledgers[(strategy, r)] = w.ledger.snapshot()
    return plans, hashes, ledgers


def measure(world: SimState, plans: dict) -> list[dict]:
    cfg = world.cfg
    L, S = cfg.learning_slots, cfg.num_slots
    online = world.online[:, L:S]
    rows = []
    for strategy in cfg.strategies:
        for r in cfg.replication_degrees:
            series = []
            for plan in plans[(strategy, r)]:
                reps = plan.original_replicas
                rtt = world.topology.rtt_to(reps) if reps else np.zeros((world.n, 0))
                series.append((plan.owner, plan_timeseries(reps, rtt, world.bandwidth, online)))
            for k in range(S - L):
                for owner, (bw, dl, un, on) in series:
                    rows.append({"topology_seed": world.seed, "strategy": strategy, "r": r,
                                 "slot": L + k, "owner": owner, "avg_bw_kbps": float(bw[k]),
                                 "avg_delay_ms": float(dl[k]), "unavailable": int(un[k]),
                                 "online_replicas": int(on[k])})
    return rows


def simulate(cfg: ScenarioConfig, seed: int) -> RunResult:
    world = build_world(cfg, seed)
    learn(world)
    plans, hashes, ledgers = place_plans(world)
    rows = measure(world, plans)
    return RunResult(seed, rows, plans, world, hashes, ledgers)


def write_run(result: RunResult, out_dir: Path) -> list[dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_slot_csv(out_dir / "slots.csv", result.rows)
    summary = aggregate_report(result.rows)
    write_summary(summary, out_dir / "summary.csv", out_dir / "summary.json")
    with open(out_dir / "plans.jsonl", "w") as fh:
        for key in sorted(result.plans):
            for plan in result.plans[key]:
                fh.write(plan.to_json() + "\n")
    result.world.ledger.to_csv(out_dir / "ledger.csv")
    (out_dir / "placement_ledgers.json").write_text(json.dumps(
        {f"{s}:{r}": v for (s, r), v in sorted(result.ledgers.items())}, indent=1, sort_keys=True) + "\n")
    result.world.topology.dump(out_dir / "topology.csv")
    return summary


def run_scenario(cfg: ScenarioConfig, seed: int | None = None, out_dir: str | Path | None = None):
    seed = cfg.seeds[0] if seed is None else seed
    out = Path(out_dir) if out_dir is not None else cfg.resolved_output_dir
    result = simulate(cfg, seed)
    summary = write_run(result, out)
    return result, summary


def _run_seed(args):
    cfg, seed, out = args
    result = simulate(cfg, seed)
    write_run(result, out)
    return result.rows


def sweep(cfg: ScenarioConfig, out_dir: str | Path | None = None, workers: int = 1) -> list[dict]:
    """All seeds of `cfg`; each writes its own directory, then results are merged."""
    out = Path(out_dir) if out_dir is not None else cfg.resolved_output_dir
    jobs = [(cfg, s, out / f"seed_{s}") for s in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_seed = list(ex.map(_run_seed, jobs))
    else:
        per_seed = [_run_seed(j) for j in jobs]
    rows = [row for rs in per_seed for row in rs]
    out.mkdir(parents=True, exist_ok=True)
    write_slot_csv(out / "slots.csv", rows)
    summary = aggregate_report(rows)
    write_summary(summary, out / "summary.csv", out / "summary.json")
    return summary
