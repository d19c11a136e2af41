"""Node utility vectors, bandwidth and storage sampling."""

from __future__ import annotations

import numpy as np


def compute_utility_vector(p, bandwidth_norm, rp_load):
    """Per-slot utility: availability times normalised bandwidth over (load + 1).

    Broadcasts, so `p` may be a single vector or an (n, slots) matrix with
    per-node `bandwidth_norm` and `rp_load` arrays.
    """
    p = np.asarray(p, dtype=float)
    bw = np.asarray(bandwidth_norm, dtype=float)
    load = np.asarray(rp_load, dtype=float)
    if p.ndim == 2:
        bw, load = bw[:, None], load[:, None]
    return p * bw / (load + 1.0)


def utility_score(uv) -> float | np.ndarray:
    """Euclidean norm of a utility vector (row-wise for matrices)."""
    uv = np.asarray(uv, dtype=float)
    return np.linalg.norm(uv, axis=-1)


def sample_bandwidths(n: int, mean_kbps: float, rng: np.random.Generator,
                      bw_max: float | None = None) -> np.ndarray:
    if mean_kbps <= 0:
        raise ValueError("mean bandwidth must be positive")
    bw = rng.exponential(mean_kbps, size=n)
    if bw_max is not None:
        bw = np.minimum(bw, bw_max)
    return bw


def normalize_bandwidths(bw: np.ndarray, bw_max: float) -> np.ndarray:
    return np.clip(np.asarray(bw, dtype=float) / bw_max, 0.0, 1.0)


def sample_storage(n: int, rng: np.random.Generator, low: int = 1, high: int = 3) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.integers(low, high + 1, size=n)
