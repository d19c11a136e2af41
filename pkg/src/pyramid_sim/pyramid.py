"""Utility- and locality-aware replica placement over the virtual system."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .overlay import best_by_score, search_for_utility
from .rwd import PlanError, build_rwd_instance, solve_rwd, swd, tcwd

if TYPE_CHECKING:
    from .world import SimState


@dataclass
class RegionPlan:
    region: int
    sub_degree: int
    weights: list[float]
    y: list[int]
    objective: float


@dataclass
class ReplicationPlan:
    owner: int
    strategy: str
    r: int
    original_replicas: list[int] = field(default_factory=list)
    virtual_replicas: list[tuple[int, int]] = field(default_factory=list)
    per_region: list[RegionPlan] = field(default_factory=list)
    shortfall: int = 0

    def to_json(self) -> str:
        d = asdict(self)
        d["virtual_replicas"] = [list(v) for v in self.virtual_replicas]
        return json.dumps(d, sort_keys=True)


def place(world: SimState, plan: ReplicationPlan, node: int) -> None:
    """Commit one replica: storage is consumed and the node's load grows."""
    if not world.online_now()[node] or world.rp_load[node] >= world.storage[node]:
        raise PlanError(f"node {node} is not eligible for replication")
    if node in plan.original_replicas:
        raise PlanError(f"node {node} already holds a replica of {plan.owner}")
    world.rp_load[node] += 1
    plan.original_replicas.append(int(node))


def finish(world: SimState, plan: ReplicationPlan) -> ReplicationPlan:
    plan.shortfall = plan.r - len(plan.original_replicas)
    if plan.original_replicas:
        world.registry.publish(plan.owner, plan.original_replicas)
    return plan


def region_probe(world: SimState, region: int, probes: int, rng: np.random.Generator,
                 exclude: Iterable[int]) -> int | None:
    """Fallback: best of a few random eligible nodes anywhere in the region."""
    mask = world.eligible_mask() & (world.topology.regions == region)
    excl = list(exclude)
    if excl:
        mask[excl] = False
    cands = np.flatnonzero(mask)
    if len(cands) == 0:
        return None
    picked = np.sort(rng.choice(cands, size=min(probes, len(cands)), replace=False))
    return best_by_score(picked, world.utility_scores()[picked], picked)


def virtual_placement(world: SimState, r: int, locality_only: bool = False):
    """SWD, then per-region TCWD + RWD. Returns (virtual replicas, region plans)."""
    snap = world.table.read()
    if snap.counts.sum() == 0:
        raise PlanError("utility table is empty; nothing has been learned yet")
    pops = snap.counts.sum(axis=1)
    caps = (snap.counts > 0).sum(axis=1)
    sub = swd(pops, r, caps)
    vreps, regions = [], []
    for l in np.flatnonzero(sub):
        ut_l, cnt_l = snap.region(l)
        if locality_only:
            ut_l = (cnt_l > 0)[:, None] * np.ones_like(ut_l)
        w = tcwd(ut_l, cnt_l)
        inst = build_rwd_instance(ut_l, cnt_l, w, int(sub[l]), world.cfg.effective_vs_size)
        sol = solve_rwd(inst)
        vreps.extend((int(l), v) for v in sol.y)
        regions.append(RegionPlan(int(l), int(sub[l]), [float(v) for v in w], list(sol.y), sol.objective))
    return vreps, regions


def pyramid_replicate(owner: int, world: SimState, r: int, alpha: int, rng: np.random.Generator,
                      allow_owner: bool = True, strategy: str = "pyramid",
                      locality_only: bool = False) -> ReplicationPlan:
    plan = ReplicationPlan(owner=int(owner), strategy=strategy, r=r)
    plan.virtual_replicas, plan.per_region = virtual_placement(world, r, locality_only)
    banned = [] if allow_owner else [int(owner)]
    for region, v in plan.virtual_replicas:
        world.ledger.record("search")
        exclude = plan.original_replicas + banned
        node = search_for_utility(v, region, alpha, world, rng, exclude=exclude)
        if node is None:
            node = region_probe(world, region, alpha, rng, exclude)
        if node is not None:
            place(world, plan, node)
    return finish(world, plan)
