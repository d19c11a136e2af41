"""Simulation state shared by every strategy: topology, churn, resources, board."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import churn as churn_mod
from .aggregation import CostLedger, ReplicaRegistry, UtilityTable
from .config import ScenarioConfig
from .overlay import Topology, generate_topology
from .utility import compute_utility_vector, normalize_bandwidths, sample_bandwidths, sample_storage

# rng stream tags; every stream is seeded from (seed, tag, ...)
TOPOLOGY, CHURN, CHURN_REGIONS, RESOURCES, STRATEGY, PIGGYBACK, OWNERS = range(7)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([seed, *key])


@dataclass
class KnowledgeBase:
    """Piggybacked utility vectors each data owner has overheard."""

    owners: np.ndarray
    uv: np.ndarray  # (owners, n, slots)
    last_seen: np.ndarray  # (owners, n), -1 when never seen

    @classmethod
    def empty(cls, owners, n: int, slots: int) -> KnowledgeBase:
        owners = np.asarray(owners, dtype=np.int64)
        return cls(owners, np.zeros((len(owners), n, slots)), np.full((len(owners), n), -1, dtype=np.int64))

    def row(self, owner: int) -> int:
        hit = np.flatnonzero(self.owners == owner)
        if len(hit) == 0:
            raise KeyError(f"{owner} is not a data owner")
        return int(hit[0])

    def known(self, owner: int) -> np.ndarray:
        return np.flatnonzero(self.last_seen[self.row(owner)] >= 0)

    def vectors(self, owner: int, nodes) -> np.ndarray:
        return self.uv[self.row(owner)][np.asarray(nodes, dtype=int)]

    def record(self, owner: int, nodes, uvs, slot: int) -> None:
        k = self.row(owner)
        self.uv[k, nodes] = uvs
        self.last_seen[k, nodes] = slot


@dataclass
class SimState:
    cfg: ScenarioConfig
    seed: int
    topology: Topology
    traces: list
    slot_fraction: np.ndarray  # (n, num_slots) online fraction of each slot
    online: np.ndarray  # (n, num_slots) online at slot start
    bandwidth: np.ndarray
    bw_norm: np.ndarray
    storage: np.ndarray
    rp_load: np.ndarray
    availability: np.ndarray  # (n, fpti_slots) latest computed p
    owners: np.ndarray
    table: UtilityTable
    registry: ReplicaRegistry
    ledger: CostLedger
    kb: KnowledgeBase
    slot: int = 0
    report_log: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def virtual_bits(self) -> int:
        return self.cfg.virtual_bits

    @property
    def num_virtual(self) -> int:
        return 1 << self.cfg.virtual_bits

    def virtual_ids(self) -> np.ndarray:
        return self.topology.virtual_ids(self.virtual_bits)

    def online_now(self) -> np.ndarray:
        return self.online[:, self.slot]

    def has_free_storage(self) -> np.ndarray:
        return self.rp_load < self.storage

    def eligible_mask(self) -> np.ndarray:
        return self.online_now() & self.has_free_storage()

    def utility_vectors(self) -> np.ndarray:
        return compute_utility_vector(self.availability, self.bw_norm, self.rp_load)

    def utility_scores(self) -> np.ndarray:
        return np.linalg.norm(self.utility_vectors(), axis=1)

    # -- time ---------------------------------------------------------------

    def advance_to(self, slot: int) -> None:
        if slot < self.slot:
            raise ValueError("slots advance monotonically")
        fpti = self.cfg.fpti_slots
        for s in range(self.slot + 1, slot + 1):
            if s % fpti == 0:
                self.table.reset_epoch(self.table.epoch + 1)
        self.slot = slot

    def report_phase(self) -> int:
        """Each online node with free storage reports once per FPTI cycle, at its first online slot."""
        fpti = self.cfg.fpti_slots
        cycles = self.slot // fpti
        cand = np.flatnonzero(self.eligible_mask())
        cand = [i for i in cand if not self.table.has_reported(int(i))]
        if not cand:
            return 0
        cand = np.asarray(cand)
        if cycles >= 1:
            self.availability[cand] = churn_mod.availability_matrix(
                self.slot_fraction[cand], cycles, fpti)
        else:
            self.availability[cand] = 0.0
        uvs = compute_utility_vector(self.availability[cand], self.bw_norm[cand], self.rp_load[cand])
        virt = self.virtual_ids()
        for i, uv in zip(cand, uvs):
            self.table.report(int(i), int(self.topology.regions[i]), int(virt[i]), uv)
            self.report_log.append((self.table.epoch, int(i)))
        return len(cand)

    # -- placement isolation ---------------------------------------------------

    def clone(self) -> SimState:
        """Independent copy of the mutable placement state; static arrays are shared."""
        ledger = CostLedger(self.ledger.n, self.ledger.c, self.ledger.counts.copy(), self.ledger.messages.copy())
        table = self.table.copy()
        table.ledger = ledger
        registry = ReplicaRegistry(ledger)
        registry._plans = {k: list(v) for k, v in self.registry._plans.items()}
        return SimState(
            cfg=self.cfg, seed=self.seed, topology=self.topology, traces=self.traces,
            slot_fraction=self.slot_fraction, online=self.online, bandwidth=self.bandwidth,
            bw_norm=self.bw_norm, storage=self.storage, rp_load=self.rp_load.copy(),
            availability=self.availability.copy(), owners=self.owners, table=table,
            registry=registry, ledger=ledger, kb=self.kb, slot=self.slot,
        )

    def snapshot_hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.rp_load, self.availability, self.table.sums, self.table.counts,
                    self.kb.uv, self.kb.last_seen):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(str(sorted(self.registry._plans.items())).encode())
        h.update(str(self.slot).encode())
        return h.hexdigest()


def build_world(cfg: ScenarioConfig, seed: int) -> SimState:
    topo = generate_topology(cfg, stream(seed, TOPOLOGY))
    n = topo.n
    ch = cfg.churn
    populations = np.bincount(topo.regions, minlength=topo.num_regions)
    inter = churn_mod.region_interarrival_params(
        topo.num_regions, ch.offline_mean_hours, ch.interarrival_shape_range,
        ch.region_factor_range, stream(seed, CHURN_REGIONS), populations=populations)
    session = churn_mod.WeibullParams.from_mean(ch.session_mean_hours, ch.session_shape)
    traces = [churn_mod.generate_trace(i, int(topo.regions[i]), cfg.horizon_hours, session, inter,
                                       stream(seed, CHURN, i)) for i in range(n)]
    S, ts = cfg.num_slots, cfg.ts_hours
    slot_fraction = np.vstack([t.slot_online_fraction(S, ts) for t in traces])
    online = np.vstack([t.online_at_slot_starts(S, ts) for t in traces])

    res = stream(seed, RESOURCES)
    bw = sample_bandwidths(n, cfg.bandwidth_mean_kbps, res, bw_max=cfg.bw_max_kbps)
    storage = sample_storage(n, res, *cfg.storage_range)
    owners = np.sort(stream(seed, OWNERS).choice(n, size=cfg.num_owners, replace=False))

    ledger = CostLedger(n, cfg.cost_constant)
    return SimState(
        cfg=cfg, seed=seed, topology=topo, traces=traces, slot_fraction=slot_fraction,
        online=online, bandwidth=bw, bw_norm=normalize_bandwidths(bw, cfg.bw_max_kbps),
        storage=storage, rp_load=np.zeros(n, dtype=np.int64),
        availability=np.zeros((n, cfg.fpti_slots)), owners=owners,
        table=UtilityTable(topo.num_regions, 1 << cfg.virtual_bits, cfg.fpti_slots, ledger),
        registry=ReplicaRegistry(ledger), ledger=ledger,
        kb=KnowledgeBase.empty(owners, n, cfg.fpti_slots),
    )


def piggyback_budget(cfg: ScenarioConfig, n_online: int) -> int:
    if cfg.piggyback_budget is not None:
        return cfg.piggyback_budget
    if n_online < 2:
        return 0
    return math.ceil(cfg.piggyback_factor * n_online * math.ceil(math.log2(n_online)))


def simulate_piggyback(world: SimState, slot: int, searches: int, rng: np.random.Generator) -> None:
    """Random searches among online nodes; owners on a path overhear everyone else on it."""
    if searches < 0:
        raise ValueError("searches must be >= 0")
    online = np.flatnonzero(world.online[:, slot])
    n_o = len(online)
    if searches == 0 or n_o < 2:
        return
    length = max(2, math.ceil(math.log2(n_o)))
    paths = online[rng.integers(n_o, size=(searches, length))]
    world.ledger.record("piggyback", times=searches, messages_each=length)
    uvs = None
    for owner in world.kb.owners:
        if not world.online[owner, slot]:
            continue
        rows = (paths == owner).any(axis=1)
        if not rows.any():
            continue
        members = np.unique(paths[rows])
        members = members[members != owner]
        if uvs is None:
            uvs = world.utility_vectors()
        world.kb.record(int(owner), members, uvs[members], slot)
