"""Utility-awareness (bandwidth per requester) and locality-awareness (access delay)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

SLOT_COLUMNS = ["topology_seed", "strategy", "r", "slot", "owner", "avg_bw_kbps",
                "avg_delay_ms", "unavailable", "online_replicas"]
SUMMARY_COLUMNS = ["strategy", "r", "metric", "mean", "stddev", "n_samples"]
METRICS = {"utility": "avg_bw_kbps", "delay": "avg_delay_ms"}


@dataclass
class OwnerSlot:
    avg_bandwidth_per_requester: float  # nan when no replica is online
    avg_access_delay: float
    unavailable_requesters: int
    online_replicas: int
    corresponding_counts: dict[int, int]


def closest_online_replica(requester: int, replicas, rtt_row, online) -> int | None:
    """Replica with minimum RTT to `requester` among online ones; ties -> lowest id.

    `rtt_row[k]` is the RTT from the requester to ``replicas[k]``.
    """
    best, best_rtt = None, math.inf
    for k, rep in sorted(enumerate(replicas), key=lambda kv: kv[1]):
        if not online[rep]:
            continue
        if rtt_row[k] < best_rtt:
            best, best_rtt = rep, rtt_row[k]
    return best


def owner_slot_metrics(replicas, rtt: np.ndarray, bandwidth: np.ndarray, online: np.ndarray,
                       requesters: np.ndarray | None = None) -> OwnerSlot:
    """Both metrics for one owner at one slot.

    `rtt` is (n, len(replicas)). Requesters default to every online node;
    each is served by its closest online replica.
    """
    replicas = np.asarray(replicas, dtype=int)
    order = np.argsort(replicas, kind="stable")
    replicas, rtt = replicas[order], rtt[:, order]
    requesters = np.flatnonzero(online if requesters is None else requesters)
    live = online[replicas] if len(replicas) else np.zeros(0, dtype=bool)
    if len(requesters) == 0 or not live.any():
        return OwnerSlot(math.nan, math.nan, int(len(requesters)), int(live.sum()), {})
    reps = replicas[live]
    sub = rtt[np.ix_(requesters, np.flatnonzero(live))]
    pick = sub.argmin(axis=1)  # first minimum -> lowest replica id
    counts = np.bincount(pick, minlength=len(reps))
    per_req = bandwidth[reps][pick] / counts[pick]
    delay = sub[np.arange(len(requesters)), pick]
    return OwnerSlot(
        avg_bandwidth_per_requester=float(per_req.mean()),
        avg_access_delay=float(delay.mean()),
        unavailable_requesters=0,
        online_replicas=int(len(reps)),
        corresponding_counts={int(reps[k]): int(c) for k, c in enumerate(counts) if c},
    )


def utility_awareness(world, plans, slot: int) -> dict[int, float]:
    online = world.online[:, slot]
    return {p.owner: owner_slot_metrics(p.original_replicas, world.topology.rtt_to(p.original_replicas),
                                        world.bandwidth, online).avg_bandwidth_per_requester
            for p in plans}


def locality_awareness(world, plans, slot: int) -> dict[int, float]:
    online = world.online[:, slot]
    return {p.owner: owner_slot_metrics(p.original_replicas, world.topology.rtt_to(p.original_replicas),
                                        world.bandwidth, online).avg_access_delay
            for p in plans}


def plan_timeseries(replicas, rtt: np.ndarray, bandwidth: np.ndarray, online: np.ndarray):
    """Vectorised owner_slot_metrics over many slots.

    `online` is (n, S). Returns arrays (bw, delay, unavailable, online_replicas)
    of length S.
    """
    replicas = np.asarray(replicas, dtype=int)
    n, S = online.shape
    if len(replicas) == 0:
        return (np.full(S, np.nan), np.full(S, np.nan), online.sum(axis=0), np.zeros(S, dtype=int))
    order = np.argsort(replicas, kind="stable")
    replicas, rtt = replicas[order], rtt[:, order]
    live = online[replicas]  # (k, S)
    n_live = live.sum(axis=0)
    n_req = online.sum(axis=0)
    d = np.where(live[None, :, :], rtt[:, :, None], np.inf)  # (n, k, S)
    pick = d.argmin(axis=1)  # (n, S)
    delay = np.take_along_axis(d, pick[:, None, :], axis=1)[:, 0, :]
    k = len(replicas)
    counts = np.zeros((k, S))
    for j in range(k):
        counts[j] = ((pick == j) & online).sum(axis=0)
    bw_req = bandwidth[replicas][pick] / np.maximum(np.take_along_axis(counts, pick, axis=0), 1)
    ok = (n_live > 0) & (n_req > 0)
    with np.errstate(invalid="ignore"):
        bw = np.where(ok, (bw_req * online).sum(axis=0) / np.maximum(n_req, 1), np.nan)
        dl = np.where(ok, np.where(online, delay, 0.0).sum(axis=0) / np.maximum(n_req, 1), np.nan)
    unavailable = np.where(ok, 0, n_req)
    return bw, dl, unavailable.astype(int), n_live.astype(int)


# ---------------------------------------------------------------------------
# CSV / summary
# ---------------------------------------------------------------------------

def write_slot_csv(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SLOT_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row[k]) for k in SLOT_COLUMNS})


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(round(v, 9))
    return v


def read_slot_csv(path: str | Path) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "topology_seed": int(row["topology_seed"]), "strategy": row["strategy"],
                "r": int(row["r"]), "slot": int(row["slot"]), "owner": int(row["owner"]),
                "avg_bw_kbps": float(row["avg_bw_kbps"]) if row["avg_bw_kbps"] else math.nan,
                "avg_delay_ms": float(row["avg_delay_ms"]) if row["avg_delay_ms"] else math.nan,
                "unavailable": int(row["unavailable"]), "online_replicas": int(row["online_replicas"]),
            })
    return out


def aggregate_report(rows: Iterable[dict]) -> list[dict]:
    """Mean and standard deviation per (strategy, r, metric) over owners x slots x topologies."""
    groups: dict[tuple[str, int, str], list[float]] = {}
    for row in rows:
        for metric, col in METRICS.items():
            v = row[col]
            if v is None or (isinstance(v, float) and math.isnan(v)):
                continue
            groups.setdefault((row["strategy"], int(row["r"]), metric), []).append(float(v))
    out = []
    for (strategy, r, metric), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        out.append({"strategy": strategy, "r": r, "metric": metric, "mean": float(arr.mean()),
                    "stddev": float(arr.std()), "n_samples": len(arr)})
    return out


def write_summary(summary: list[dict], csv_path: str | Path, json_path: str | Path | None = None) -> None:
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for row in summary:
            w.writerow({**row, "mean": repr(round(row["mean"], 9)), "stddev": repr(round(row["stddev"], 9))})
    if json_path is not None:
        Path(json_path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def summary_lookup(summary: list[dict]) -> dict[tuple[str, int, str], dict]:
    return {(s["strategy"], s["r"], s["metric"]): s for s in summary}
