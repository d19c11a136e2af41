"""Locality-aware Skip Graph overlay model.

Nodes live in a 2-D latency space (the unit square); RTT is Euclidean
distance scaled to milliseconds. Name IDs come from recursive median
bisection of that space, so a longer common prefix means nodes sit in the
same small cell and are therefore close.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .config import ConfigError, ScenarioConfig

if TYPE_CHECKING:
    from .world import SimState


@dataclass
class Topology:
    coords: np.ndarray  # (n, 2) positions in the unit square
    numerical_ids: np.ndarray  # (n,) distinct non-negative ints
    landmarks: np.ndarray  # (L, 2)
    regions: np.ndarray  # (n,) index of the closest landmark
    name_ids: np.ndarray  # (n,) m-bit ints, MSB first
    name_id_bits: int
    rtt_scale: float = 100.0

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def num_regions(self) -> int:
        return len(self.landmarks)

    def name_id_str(self, i: int) -> str:
        return format(int(self.name_ids[i]), f"0{self.name_id_bits}b")

    def rtt(self, i: int, j: int) -> float:
        return rtt(self, i, j)

    def rtt_to(self, targets: Iterable[int]) -> np.ndarray:
        """RTT matrix of shape (n, len(targets)) from every node to `targets`."""
        t = self.coords[np.asarray(list(targets), dtype=int)]
        diff = self.coords[:, None, :] - t[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1)) * self.rtt_scale

    def landmark_rtt(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.landmarks[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1)) * self.rtt_scale

    def virtual_ids(self, virtual_bits: int) -> np.ndarray:
        return self.name_ids >> (self.name_id_bits - virtual_bits)

    def dump(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x", "y", "numerical_id", "name_id", "region"])
            for i in range(self.n):
                x, y = self.coords[i]
                w.writerow([i, f"{x:.6f}", f"{y:.6f}", int(self.numerical_ids[i]),
                            self.name_id_str(i), int(self.regions[i])])


def generate_topology(cfg: ScenarioConfig, rng_seed: int | np.random.Generator) -> Topology:
    if cfg.n < 2 or cfg.num_landmarks < 1:
        raise ConfigError("topology needs n >= 2 and at least one landmark")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    coords = rng.random((cfg.n, 2))
    landmarks = rng.random((cfg.num_landmarks, 2))
    numerical_ids = rng.choice(2**31, size=cfg.n, replace=False).astype(np.int64)
    topo = Topology(
        coords=coords,
        numerical_ids=numerical_ids,
        landmarks=landmarks,
        regions=np.zeros(cfg.n, dtype=np.int64),
        name_ids=np.zeros(cfg.n, dtype=np.int64),
        name_id_bits=cfg.effective_name_id_bits,
        rtt_scale=cfg.rtt_scale,
    )
    assign_regions(topo)
    assign_name_ids(topo)
    return topo


def assign_regions(topo: Topology) -> Topology:
    # argmin keeps the first (lowest) landmark index on ties
    topo.regions = np.argmin(topo.landmark_rtt(), axis=1).astype(np.int64)
    return topo


def assign_name_ids(topo: Topology) -> Topology:
    m = topo.name_id_bits
    name_ids = np.zeros(topo.n, dtype=np.int64)
    # stack of (member indices, depth, prefix, cell bounds [x0, x1, y0, y1])
    stack = [(np.arange(topo.n), 0, 0, (0.0, 1.0, 0.0, 1.0))]
    while stack:
        idx, depth, prefix, bounds = stack.pop()
        if depth == m:
            name_ids[idx] = prefix
            continue
        axis = depth % 2
        lo, hi = bounds[2 * axis], bounds[2 * axis + 1]
        vals = topo.coords[idx, axis]
        if len(idx) >= 2:
            order = np.lexsort((idx, vals))
            half = len(idx) // 2
            low, high = idx[order[:half]], idx[order[half:]]
            split = 0.5 * (vals[order[half - 1]] + vals[order[half]])
        else:
            split = 0.5 * (lo + hi)
            low, high = idx[vals < split], idx[vals >= split]
        b_low, b_high = list(bounds), list(bounds)
        b_low[2 * axis + 1] = split
        b_high[2 * axis] = split
        stack.append((high, depth + 1, (prefix << 1) | 1, tuple(b_high)))
        stack.append((low, depth + 1, prefix << 1, tuple(b_low)))
    topo.name_ids = name_ids
    return topo


def common_prefix_length(a: str | int, b: str | int, bits: int | None = None) -> int:
    """Number of leading equal bits of two name IDs.

    Accepts bit strings such as ``"0011"`` or ints together with ``bits``.
    """
    if isinstance(a, str) or isinstance(b, str):
        if not (isinstance(a, str) and isinstance(b, str)) or len(a) != len(b):
            raise ValueError(f"name IDs must be equal-length bit strings: {a!r}, {b!r}")
        k = 0
        for x, y in zip(a, b):
            if x != y:
                break
            k += 1
        return k
    if bits is None:
        raise ValueError("bits is required for integer name IDs")
    diff = (int(a) ^ int(b)) & ((1 << bits) - 1)
    return bits - diff.bit_length()


def prefix_matrix(bits: int) -> np.ndarray:
    """Common prefix lengths between all `bits`-bit ids, shape (2**bits, 2**bits)."""
    ids = np.arange(1 << bits)
    x = ids[:, None] ^ ids[None, :]
    # bit_length of x via log2 on positives
    bl = np.zeros_like(x)
    pos = x > 0
    bl[pos] = np.floor(np.log2(x[pos])).astype(x.dtype) + 1
    return bits - bl


def rtt(topo: Topology, i: int, j: int) -> float:
    d = topo.coords[i] - topo.coords[j]
    return float(math.hypot(d[0], d[1]) * topo.rtt_scale)


def virtual_of(name_id: int | str, vs_size: int, name_id_bits: int | None = None) -> int:
    """Virtual node of a name ID: the integer value of its first ceil(log2 vs_size) bits."""
    k = max(0, math.ceil(math.log2(vs_size)))
    if isinstance(name_id, str):
        if len(name_id) < k:
            raise ValueError("name ID shorter than the virtual id width")
        return int(name_id[:k], 2) if k else 0
    if name_id_bits is None or name_id_bits < k:
        raise ValueError("name_id_bits must be given and >= ceil(log2 vs_size)")
    return int(name_id) >> (name_id_bits - k)


def ring_walk(candidates: np.ndarray, numerical_ids: np.ndarray, rng: np.random.Generator,
              limit: int) -> np.ndarray:
    """Visit up to `limit` candidates in ascending numerical-ID order from a random entry."""
    if len(candidates) == 0:
        return candidates
    ring = candidates[np.argsort(numerical_ids[candidates], kind="stable")]
    start = int(rng.integers(len(ring)))
    return np.roll(ring, -start)[:limit]


def search_for_utility(vrep: int, region: int, alpha: int, world: SimState,
                       rng: np.random.Generator, exclude: Iterable[int] = ()) -> int | None:
    """Best-utility eligible node among at most `alpha` visited in the prefix set of `vrep`."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    topo = world.topology
    mask = world.eligible_mask() & (topo.regions == region)
    mask &= topo.virtual_ids(world.virtual_bits) == vrep
    excl = list(exclude)
    if excl:
        mask[excl] = False
    visited = ring_walk(np.flatnonzero(mask), topo.numerical_ids, rng, alpha)
    if len(visited) == 0:
        return None
    return best_by_score(visited, world.utility_scores()[visited], topo.numerical_ids[visited])


def best_by_score(nodes: np.ndarray, scores: np.ndarray, tiebreak: np.ndarray) -> int:
    """Node with max score; ties go to the lowest `tiebreak` key."""
    order = np.lexsort((tiebreak, -scores))
    return int(nodes[order[0]])
