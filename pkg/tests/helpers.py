"""Shared helpers for the test modules."""

import math

import numpy as np


def always_online(world):
    """Turn `world` into a churn-free world (every node online every slot)."""
    world.online[:] = True
    world.slot_fraction[:] = 1.0
    return world


def random_instance_arrays(rng: np.random.Generator, vs_size=None, slots=None, r=None):
    """Random table for one region inside the brute-force oracle bounds."""
    vs_size = vs_size or int(rng.integers(2, 7))
    bits = math.ceil(math.log2(vs_size))
    V = 1 << bits
    T = slots or int(rng.integers(1, 5))
    counts = rng.integers(0, 3, size=V)
    if (counts > 0).sum() == 0:
        counts[rng.integers(V)] = 1
    ut = rng.random((V, T)) * (counts > 0)[:, None]
    w = rng.random(T)
    w /= w.sum()
    pop = int((counts > 0).sum())
    r = r or int(rng.integers(1, min(3, pop) + 1))
    return ut, counts, w, r, vs_size
