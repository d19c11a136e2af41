"""Comparison strategies. All but glaras pick from the owner's piggybacked knowledge."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .pyramid import ReplicationPlan, finish, place, pyramid_replicate
from .rwd import PlanError

if TYPE_CHECKING:
    from .world import SimState

EPS = 1e-9


def _pool(owner: int, world: SimState) -> tuple[np.ndarray, np.ndarray]:
    """Known nodes that are online with free storage now, and their piggybacked vectors."""
    known = world.kb.known(owner)
    if len(known) == 0:
        raise PlanError(f"owner {owner} has an empty knowledge base")
    ok = world.eligible_mask()[known]
    nodes = known[ok]
    return nodes, world.kb.vectors(owner, nodes)


def randomized_replicate(owner: int, r: int, world: SimState, rng: np.random.Generator) -> ReplicationPlan:
    plan = ReplicationPlan(owner=int(owner), strategy="random", r=r)
    known = world.kb.known(owner)
    if len(known) == 0:
        raise PlanError(f"owner {owner} has an empty knowledge base")
    for node in rng.permutation(known):
        if len(plan.original_replicas) == r:
            break
        # ping: skip offline or full nodes
        if world.online_now()[node] and world.rp_load[node] < world.storage[node]:
            place(world, plan, int(node))
    return finish(world, plan)


def power_of_choice_replicate(owner: int, r: int, world: SimState, rng: np.random.Generator) -> ReplicationPlan:
    plan = ReplicationPlan(owner=int(owner), strategy="poc", r=r)
    nodes, uvs = _pool(owner, world)
    scores = np.linalg.norm(uvs, axis=1)
    free = list(range(len(nodes)))
    for _ in range(r):
        if not free:
            break
        if len(free) == 1:
            k = free[0]
        else:
            a, b = rng.choice(len(free), size=2, replace=False)
            a, b = free[a], free[b]
            if scores[a] != scores[b]:
                k = a if scores[a] > scores[b] else b
            else:
                k = a if nodes[a] < nodes[b] else b
        free.remove(k)
        place(world, plan, int(nodes[k]))
    return finish(world, plan)


def kmeans(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100):
    """Lloyd's algorithm with k-means++ seeding. Returns (labels, centers)."""
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be in [1, {n}]")
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else int(rng.integers(n))
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    labels = np.full(n, -1)
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = dist.argmin(axis=1)
        sizes = np.bincount(new, minlength=k)
        for c in np.flatnonzero(sizes == 0):
            # re-seed an empty cluster at the point farthest from its center
            far = int(dist[np.arange(n), new].argmax())
            new[far] = c
            centers[c] = X[far]
            dist[far] = np.inf
            dist[far, c] = 0.0
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
    return labels, centers


def cluster_based_replicate(owner: int, r: int, world: SimState, rng: np.random.Generator) -> ReplicationPlan:
    plan = ReplicationPlan(owner=int(owner), strategy="cluster", r=r)
    nodes, uvs = _pool(owner, world)
    if len(nodes) == 0:
        return finish(world, plan)
    k = min(r, len(nodes))
    labels, _ = kmeans(uvs, k, rng)
    scores = np.linalg.norm(uvs, axis=1)
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if len(members) == 0:
            continue
        best = members[np.lexsort((nodes[members], -scores[members]))[0]]
        place(world, plan, int(nodes[best]))
    return finish(world, plan)


def correlation_based_replicate(owner: int, r: int, world: SimState) -> ReplicationPlan:
    plan = ReplicationPlan(owner=int(owner), strategy="correlation", r=r)
    nodes, uvs = _pool(owner, world)
    scores = np.linalg.norm(uvs, axis=1)
    by_score = list(np.lexsort((nodes, -scores)))
    seeds = by_score[: r // 2]
    used = set(seeds)
    partners = []
    for s in seeds:
        rest = np.array([v for v in range(len(nodes)) if v not in used], dtype=int)
        if len(rest) == 0:
            break
        ratio = scores[rest] / np.maximum(uvs[rest] @ uvs[s], EPS)
        v = int(rest[np.lexsort((nodes[rest], -ratio))[0]])
        used.add(v)
        partners.append(v)
    chosen = [x for pair in zip(seeds, partners) for x in pair] + seeds[len(partners):]
    if r % 2 == 1:
        extra = [v for v in by_score if v not in used]
        if extra:
            chosen.append(extra[0])
    for k in chosen[:r]:
        place(world, plan, int(nodes[k]))
    return finish(world, plan)


def glaras_like_replicate(owner: int, r: int, world: SimState, rng: np.random.Generator,
                          allow_owner: bool = True) -> ReplicationPlan:
    """Locality-only stand-in: same pipeline with unit utilities and first-found mapping."""
    return pyramid_replicate(owner, world, r, alpha=1, rng=rng, allow_owner=allow_owner,
                             strategy="glaras", locality_only=True)


def replicate(strategy: str, owner: int, r: int, world: SimState, rng: np.random.Generator) -> ReplicationPlan:
    cfg = world.cfg
    if strategy == "pyramid":
        return pyramid_replicate(owner, world, r, cfg.alpha, rng, allow_owner=cfg.allow_owner_replica)
    if strategy == "glaras":
        return glaras_like_replicate(owner, r, world, rng, allow_owner=cfg.allow_owner_replica)
    if strategy == "random":
        return randomized_replicate(owner, r, world, rng)
    if strategy == "poc":
        return power_of_choice_replicate(owner, r, world, rng)
    if strategy == "cluster":
        return cluster_based_replicate(owner, r, world, rng)
    if strategy == "correlation":
        return correlation_based_replicate(owner, r, world)
    raise ValueError(f"unknown strategy {strategy!r}")
