"""Region-wide replica placement over the virtual system.

The placement ILP for one region: choose ``r`` virtual replicas ``y`` and
an assignment ``x`` of every (requester virtual node j, slot t) to one
replica, maximising sum of C[i, j] * UT[i, t] * W[t] over the assignment,
where every chosen replica must be assigned at least one pair.

Requesters ``j`` range over the populated virtual nodes of the region, and
so do replica candidates. An unpopulated virtual node hosts no requester and
no storage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .overlay import prefix_matrix


class PlanError(RuntimeError):
    """Placement cannot proceed (infeasible degree, nothing learned, ...)."""


class RwdInfeasible(PlanError):
    pass


# ---------------------------------------------------------------------------
# system-wide distribution
# ---------------------------------------------------------------------------

def swd(region_populations, r: int, caps=None) -> np.ndarray:
    """Split degree `r` across regions proportionally to population.

    Largest-remainder rounding; a region never receives more than its cap
    (its populated virtual-node count) and overflow moves on in remainder
    order. Ties go to the lower region index.
    """
    pops = [int(p) for p in region_populations]
    if r < 1:
        raise ValueError("replication degree must be >= 1")
    if caps is None:
        caps = [math.inf if p > 0 else 0 for p in pops]
    caps = [c if p > 0 else 0 for c, p in zip(caps, pops)]
    total = sum(pops)
    if total == 0 or sum(caps) < r:
        raise PlanError(f"degree {r} exceeds eligible capacity {sum(caps)}")
    floors = [min((r * p) // total, c) for p, c in zip(pops, caps)]
    order = sorted(range(len(pops)), key=lambda l: (-Fraction(r * pops[l] % total, total), l))
    out = list(floors)
    remaining = r - sum(out)
    while remaining > 0:
        progressed = False
        for l in order:
            if remaining == 0:
                break
            if out[l] < caps[l]:
                out[l] += 1
                remaining -= 1
                progressed = True
        if not progressed:  # pragma: no cover - excluded by the capacity check
            raise PlanError("cannot distribute replication degree")
    return np.asarray(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# time-slot coverage weights
# ---------------------------------------------------------------------------

def tcwd(ut_l, counts_l) -> np.ndarray:
    """Weight per slot: share of populated virtual nodes at or below the region's mean utility."""
    ut_l = np.asarray(ut_l, dtype=float)
    populated = np.asarray(counts_l) > 0
    T = ut_l.shape[1]
    if not populated.any():
        return np.full(T, 1.0 / T)
    cells = ut_l[populated]
    avg = math.fsum(cells.ravel()) / cells.size
    # absorb rounding in the mean so equal cells always count
    below = cells <= avg + 1e-12 * max(1.0, abs(avg))
    counts_t = below.sum(axis=0)
    total = counts_t.sum()
    if total == 0:
        return np.full(T, 1.0 / T)
    return counts_t / total


# ---------------------------------------------------------------------------
# instance / solution
# ---------------------------------------------------------------------------

@dataclass
class RwdInstance:
    ut: np.ndarray  # (V, T) averaged utility of each virtual node
    counts: np.ndarray  # (V,) contributors per virtual node
    w: np.ndarray  # (T,)
    r: int
    c: np.ndarray  # (V, V) common prefix lengths
    vs_size: int

    @property
    def num_virtual(self) -> int:
        return len(self.counts)

    @property
    def num_slots(self) -> int:
        return self.ut.shape[1]

    @property
    def populated(self) -> np.ndarray:
        return np.flatnonzero(self.counts > 0)

    def contribution(self, i: int, j: int, t: int) -> float:
        return float(self.c[i, j] * self.ut[i, t] * self.w[t])

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(j), t) for j in self.populated for t in range(self.num_slots)]

    def gain_matrix(self) -> np.ndarray:
        """Contributions of every candidate (rows, populated order) to every pair (cols)."""
        P = self.populated
        g = self.c[np.ix_(P, P)][:, :, None] * self.ut[P][:, None, :] * self.w[None, None, :]
        return g.reshape(len(P), len(P) * self.num_slots)


@dataclass
class RwdSolution:
    y: tuple[int, ...]
    x: dict[tuple[int, int], int] = field(repr=False)
    objective: float


def build_rwd_instance(ut, counts, w, r_l: int, vs_size: int) -> RwdInstance:
    ut = np.asarray(ut, dtype=float)
    counts = np.asarray(counts)
    bits = max(0, math.ceil(math.log2(vs_size)))
    V = ut.shape[0]
    if V != 1 << bits:
        raise ValueError(f"table has {V} virtual rows, expected {1 << bits} for vs_size={vs_size}")
    if r_l < 1:
        raise ValueError("sub-replication degree must be >= 1")
    if r_l > int((counts > 0).sum()):
        raise RwdInfeasible(f"r_l={r_l} exceeds populated virtual nodes {(counts > 0).sum()}")
    return RwdInstance(ut=ut, counts=counts, w=np.asarray(w, dtype=float), r=r_l,
                       c=prefix_matrix(bits), vs_size=vs_size)


def rwd_objective(inst: RwdInstance, x: dict[tuple[int, int], int]) -> float:
    """Objective of an assignment, summed exactly-rounded in (j, t) order."""
    if not x:
        return 0.0
    keys = sorted(x)
    j = np.array([k[0] for k in keys])
    t = np.array([k[1] for k in keys])
    i = np.array([x[k] for k in keys])
    return math.fsum((inst.c[i, j] * inst.ut[i, t] * inst.w[t]).tolist())


def check_constraints(inst: RwdInstance, sol: RwdSolution) -> list[str]:
    """Violations of the placement constraints; empty when the solution is valid."""
    errs = []
    y = set(sol.y)
    if len(y) != len(sol.y):
        errs.append("duplicate replicas in y")
    if any(not (0 <= i < inst.num_virtual) for i in y):
        errs.append("y holds an out-of-range virtual id")
    if len(sol.y) != inst.r:
        errs.append(f"|y|={len(sol.y)} != r={inst.r}")
    required = set(inst.pairs())
    if set(sol.x) != required:
        errs.append("x does not cover every (requester, slot) pair exactly once")
    if any(i not in y for i in sol.x.values()):
        errs.append("x assigns to a virtual node outside y")
    served = set(sol.x.values())
    for i in sol.y:
        if i not in served:
            errs.append(f"replica {i} serves no pair")
    if any(not isinstance(i, (int, np.integer)) for i in sol.x.values()):
        errs.append("non-integral assignment")
    return errs


# ---------------------------------------------------------------------------
# exact solver
# ---------------------------------------------------------------------------

_CHUNK_ELEMS = 2_000_000


def _assign_for(sub: np.ndarray) -> np.ndarray:
    """Best assignment of pairs (columns) to rows such that every row serves >= 1 pair.

    Pairs go to their best row unless some row is left idle; then every row
    gets a distinct witness pair at minimum total loss (a rectangular
    assignment problem) and all other pairs stay on their best row.
    """
    arg = np.argmax(sub, axis=0)
    if np.bincount(arg, minlength=sub.shape[0]).min() > 0:
        return arg
    loss = sub.max(axis=0)[None, :] - sub
    rows, cols = linear_sum_assignment(loss)
    arg = arg.copy()
    arg[cols] = rows
    return arg


def solve_rwd(inst: RwdInstance) -> RwdSolution:
    P = inst.populated
    r = inst.r
    if r < 1 or r > len(P):
        raise RwdInfeasible(f"no feasible replica set: r={r}, populated={len(P)}")
    G = inst.gain_matrix()
    K = G.shape[1]
    if K < r:
        raise RwdInfeasible("fewer (requester, slot) pairs than replicas")
    pairs = inst.pairs()

    combos_all = np.array(list(combinations(range(len(P)), r)), dtype=np.int64)
    approx = np.empty(len(combos_all))
    chunk = max(1, _CHUNK_ELEMS // (r * K))
    for s in range(0, len(combos_all), chunk):
        combos = combos_all[s:s + chunk]
        sub = G[combos]  # (B, r, K)
        best = sub.max(axis=1)
        arg = sub.argmax(axis=1)
        ok = np.ones(len(combos), dtype=bool)
        for k in range(r):
            ok &= (arg == k).any(axis=1)
        approx[s:s + len(combos)] = best.sum(axis=1)
        for b in np.flatnonzero(~ok):
            a = _assign_for(sub[b])
            approx[s + b] = sub[b][a, np.arange(K)].sum()

    # settle near-ties with the exactly rounded objective, lowest combo first
    top = approx.max()
    near = np.flatnonzero(approx >= top - 1e-9 * max(1.0, abs(top)))
    cols = np.arange(K)
    best_b, best_a, best_obj = None, None, -math.inf
    for b in near:
        rows = combos_all[b]
        a = _assign_for(G[rows])
        # columns of G are the pairs in sorted (j, t) order, matching rwd_objective
        obj = math.fsum(G[rows[a], cols].tolist())
        if obj > best_obj:
            best_b, best_a, best_obj = b, a, obj
    y = tuple(int(P[k]) for k in combos_all[best_b])
    x = {pairs[q]: y[best_a[q]] for q in range(K)}
    return RwdSolution(y=y, x=x, objective=best_obj)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

ORACLE_LIMITS = {"vs_size": 6, "slots": 4, "r": 3}


def brute_force_rwd(inst: RwdInstance) -> RwdSolution:
    """Exhaustive optimum over every replica set and every assignment map.

    The map space (|y| ** pairs) is explored exactly by dynamic programming
    over pairs with the set of already-served replicas as state, which
    visits every map's value without listing maps one by one.
    """
    if (inst.vs_size > ORACLE_LIMITS["vs_size"] or inst.num_slots > ORACLE_LIMITS["slots"]
            or inst.r > ORACLE_LIMITS["r"]):
        raise ValueError(f"instance exceeds oracle bounds {ORACLE_LIMITS}")
    P = [int(i) for i in inst.populated]
    if inst.r < 1 or inst.r > len(P):
        raise RwdInfeasible("no feasible replica set")
    pairs = inst.pairs()
    K = len(pairs)
    best = None
    for y in combinations(P, inst.r):
        r = len(y)
        full = (1 << r) - 1
        gain = [[inst.contribution(i, j, t) for i in y] for (j, t) in pairs]
        NEG = -math.inf
        # value[k][mask]: best total over pairs k.. given replicas in mask already served
        value = [[NEG] * (full + 1) for _ in range(K + 1)]
        value[K][full] = 0.0
        for k in range(K - 1, -1, -1):
            for mask in range(full + 1):
                v = NEG
                for a in range(r):
                    rest = value[k + 1][mask | (1 << a)]
                    if rest != NEG:
                        v = max(v, gain[k][a] + rest)
                value[k][mask] = v
        if value[0][0] == NEG:
            continue
        x, mask = {}, 0
        for k in range(K):
            for a in range(r):
                rest = value[k + 1][mask | (1 << a)]
                if rest != NEG and gain[k][a] + rest == value[k][mask]:
                    x[pairs[k]] = y[a]
                    mask |= 1 << a
                    break
        obj = rwd_objective(inst, x)
        if best is None or obj > best.objective:
            best = RwdSolution(y=tuple(y), x=x, objective=obj)
    if best is None:
        raise RwdInfeasible("no replica set admits a valid assignment")
    return best
