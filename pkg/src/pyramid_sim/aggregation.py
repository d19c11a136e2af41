"""Shared bulletin board: utility table, replica registry and message accounting.

Stands in for a DHT-backed aggregation layer. Every read or write is charged
ceil(c * log2 n) messages in the ledger.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .overlay import virtual_of  # noqa: F401  (re-exported)

OP_CLASSES = ("report", "read_table", "publish", "lookup", "search", "piggyback")


class ReportRejected(ValueError):
    pass


@dataclass
class CostLedger:
    n: int
    c: float = 1.0
    counts: Counter = field(default_factory=Counter)
    messages: Counter = field(default_factory=Counter)

    @property
    def unit_cost(self) -> int:
        return math.ceil(self.c * math.log2(self.n))

    def record(self, op_class: str, times: int = 1, messages_each: int | None = None) -> None:
        if op_class not in OP_CLASSES:
            raise ValueError(f"unknown op class {op_class!r}")
        self.counts[op_class] += times
        self.messages[op_class] += times * (self.unit_cost if messages_each is None else messages_each)

    def snapshot(self) -> dict[str, tuple[int, int]]:
        return {op: (self.counts[op], self.messages[op]) for op in OP_CLASSES}

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["op_class", "count", "messages"])
            for op in OP_CLASSES:
                w.writerow([op, self.counts[op], self.messages[op]])


@dataclass(frozen=True)
class UtilitySnapshot:
    averages: np.ndarray  # (regions, virtual nodes, slots)
    counts: np.ndarray  # (regions, virtual nodes)
    epoch: int

    def region(self, l: int) -> tuple[np.ndarray, np.ndarray]:
        return self.averages[l], self.counts[l]


class UtilityTable:
    """Per-(region, virtual node) sums of reported utility vectors plus contributor counts."""

    def __init__(self, num_regions: int, num_virtual: int, num_slots: int, ledger: CostLedger | None = None):
        self.sums = np.zeros((num_regions, num_virtual, num_slots))
        self.counts = np.zeros((num_regions, num_virtual), dtype=np.int64)
        self.epoch = 0
        self.ledger = ledger
        self._reported: set[int] = set()

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.sums.shape

    def reset_epoch(self, new_epoch: int) -> None:
        if new_epoch != self.epoch + 1:
            raise ValueError(f"epoch must advance by one: {self.epoch} -> {new_epoch}")
        self.sums.fill(0.0)
        self.counts.fill(0)
        self._reported.clear()
        self.epoch = new_epoch

    def has_reported(self, node: int) -> bool:
        return node in self._reported

    def report(self, node: int, region: int, virtual: int, uv, *, online: bool = True,
               has_free_storage: bool = True) -> None:
        if not online:
            raise ReportRejected(f"node {node} is offline")
        if not has_free_storage:
            raise ReportRejected(f"node {node} has no free storage")
        if node in self._reported:
            raise ReportRejected(f"node {node} already reported in epoch {self.epoch}")
        uv = np.asarray(uv, dtype=float)
        self.sums[region, virtual] += uv
        self.counts[region, virtual] += 1
        self._reported.add(node)
        if self.ledger is not None:
            self.ledger.record("report")

    def read(self) -> UtilitySnapshot:
        counts = self.counts.copy()
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = np.where(counts[..., None] > 0, self.sums / np.maximum(counts, 1)[..., None], 0.0)
        if self.ledger is not None:
            self.ledger.record("read_table")
        avg.setflags(write=False)
        counts.setflags(write=False)
        return UtilitySnapshot(avg, counts, self.epoch)

    def copy(self) -> UtilityTable:
        t = UtilityTable(*self.shape, ledger=self.ledger)
        t.sums = self.sums.copy()
        t.counts = self.counts.copy()
        t.epoch = self.epoch
        t._reported = set(self._reported)
        return t


def report_utility(table: UtilityTable, node: int, region: int, virtual: int, uv, **kw) -> None:
    table.report(node, region, virtual, uv, **kw)


def read_utility_table(table: UtilityTable) -> UtilitySnapshot:
    return table.read()


def reset_epoch(table: UtilityTable, new_epoch: int) -> None:
    table.reset_epoch(new_epoch)


class ReplicaRegistry:
    def __init__(self, ledger: CostLedger | None = None):
        self._plans: dict[int, list[int]] = {}
        self.ledger = ledger

    def publish(self, owner: int, replicas) -> None:
        replicas = [int(r) for r in replicas]
        if not replicas:
            raise ValueError("cannot publish an empty replica set")
        if len(set(replicas)) != len(replicas):
            raise ValueError("replica set has duplicates")
        self._plans[owner] = replicas
        if self.ledger is not None:
            self.ledger.record("publish")

    def lookup(self, owner: int) -> list[int] | None:
        if self.ledger is not None:
            self.ledger.record("lookup")
        found = self._plans.get(owner)
        return list(found) if found is not None else None

    def owners(self) -> list[int]:
        return sorted(self._plans)


def publish_replicas(registry: ReplicaRegistry, owner: int, replicas) -> None:
    registry.publish(owner, replicas)


def lookup_replicas(registry: ReplicaRegistry, owner: int) -> list[int] | None:
    return registry.lookup(owner)
