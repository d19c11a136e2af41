"""Weibull churn: per-node alternating online/offline traces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class WeibullParams:
    shape: float
    scale: float  # hours

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"Weibull shape and scale must be positive: {self}")

    @classmethod
    def from_mean(cls, mean: float, shape: float) -> WeibullParams:
        return cls(shape=shape, scale=mean / math.gamma(1.0 + 1.0 / shape))

    @property
    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


def weibull_inverse_cdf(u, shape: float, scale: float):
    return scale * (-np.log1p(-np.asarray(u, dtype=float))) ** (1.0 / shape)


def sample_weibull(params: WeibullParams, rng: np.random.Generator, size=None):
    u = rng.random(size)
    out = weibull_inverse_cdf(u, params.shape, params.scale)
    return float(out) if size is None else out


@dataclass
class ChurnTrace:
    node: int
    sessions: np.ndarray  # (k, 2) half-open [start, end) online intervals, hours
    horizon: float

    def __post_init__(self):
        self.sessions = np.asarray(self.sessions, dtype=float).reshape(-1, 2)
        self._xs = None

    def is_online(self, time: float) -> bool:
        if not 0 <= time < self.horizon:
            raise ValueError(f"time {time} outside [0, {self.horizon})")
        if len(self.sessions) == 0:
            return False
        k = np.searchsorted(self.sessions[:, 0], time, side="right") - 1
        return bool(k >= 0 and time < self.sessions[k, 1])

    def _cumulative(self):
        if self._xs is None:
            s = self.sessions
            xs = np.concatenate(([0.0], s.ravel(), [self.horizon]))
            dur = s[:, 1] - s[:, 0]
            ends = np.cumsum(dur)
            starts = ends - dur
            ys = np.concatenate(([0.0], np.column_stack([starts, ends]).ravel(),
                                 [ends[-1] if len(ends) else 0.0]))
            self._xs, self._ys = xs, ys
        return self._xs, self._ys

    def online_time_until(self, t) -> np.ndarray:
        """Total online hours in [0, t), vectorised over t."""
        xs, ys = self._cumulative()
        return np.interp(t, xs, ys)

    def online_time(self, a: float, b: float) -> float:
        return float(self.online_time_until(b) - self.online_time_until(a))

    def total_online(self) -> float:
        return float((self.sessions[:, 1] - self.sessions[:, 0]).sum())

    def slot_online_fraction(self, n_slots: int, ts: float = 1.0) -> np.ndarray:
        edges = np.arange(n_slots + 1) * ts
        # interp differences can come out a few ulps outside [0, 1]
        return np.clip(np.diff(self.online_time_until(edges)) / ts, 0.0, 1.0)

    def online_at_slot_starts(self, n_slots: int, ts: float = 1.0) -> np.ndarray:
        starts = np.arange(n_slots) * ts
        if len(self.sessions) == 0:
            return np.zeros(n_slots, dtype=bool)
        k = np.searchsorted(self.sessions[:, 0], starts, side="right") - 1
        ok = k >= 0
        out = np.zeros(n_slots, dtype=bool)
        out[ok] = starts[ok] < self.sessions[k[ok], 1]
        return out

    def session_lengths(self, complete_only: bool = True) -> np.ndarray:
        s = self.sessions
        if complete_only and len(s) and s[-1, 1] >= self.horizon:
            s = s[:-1]
        return s[:, 1] - s[:, 0]

    def offline_gaps(self) -> np.ndarray:
        s = self.sessions
        return s[1:, 0] - s[:-1, 1]


def generate_trace(node: int, region: int, horizon: float, session_params: WeibullParams,
                   interarrival_params_by_region: Sequence[WeibullParams],
                   rng: np.random.Generator) -> ChurnTrace:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    inter = interarrival_params_by_region[region]
    cycle_mean = session_params.mean + inter.mean
    t = sample_weibull(inter, rng)
    sessions = []
    while t < horizon:
        k = int(1.3 * (horizon - t) / cycle_mean) + 8
        on = sample_weibull(session_params, rng, k)
        off = sample_weibull(inter, rng, k)
        # interleave: start_i, end_i = start_i + on_i, next start = end_i + off_i
        steps = np.column_stack([on, off]).ravel()
        marks = t + np.concatenate(([0.0], np.cumsum(steps)))
        starts, ends = marks[0:-1:2], marks[1::2]
        keep = starts < horizon
        starts, ends = starts[keep], np.minimum(ends[keep], horizon)
        nonempty = ends > starts
        sessions.append(np.column_stack([starts[nonempty], ends[nonempty]]))
        t = marks[-1]
    arr = np.concatenate(sessions) if sessions else np.zeros((0, 2))
    return ChurnTrace(node=node, sessions=arr, horizon=horizon)


def availability_probability(trace: ChurnTrace, slot: int, cycles_elapsed: int,
                             fpti_slots: int = 24, ts: float = 1.0) -> float:
    """Online fraction of slot `slot` averaged over the first `cycles_elapsed` FPTI cycles."""
    if cycles_elapsed < 1:
        raise ValueError("cycles_elapsed must be >= 1")
    fpti = fpti_slots * ts
    starts = np.arange(cycles_elapsed) * fpti + slot * ts
    online = trace.online_time_until(starts + ts) - trace.online_time_until(starts)
    return float(np.clip(online.sum() / (cycles_elapsed * ts), 0.0, 1.0))


def availability_matrix(slot_fraction: np.ndarray, cycles_elapsed: int, fpti_slots: int) -> np.ndarray:
    """Per-node availability vectors from an (n, n_slots) slot online-fraction matrix."""
    if cycles_elapsed < 1:
        raise ValueError("cycles_elapsed must be >= 1")
    n = slot_fraction.shape[0]
    window = slot_fraction[:, : cycles_elapsed * fpti_slots]
    return window.reshape(n, cycles_elapsed, fpti_slots).mean(axis=1)


def region_interarrival_params(num_regions: int, mean: float, shape_range: tuple[float, float],
                               factor_range: tuple[float, float], rng: np.random.Generator,
                               populations: Sequence[int] | None = None) -> list[WeibullParams]:
    """Distinct per-region inter-arrival distributions.

    Mean factors stay inside `factor_range` and their population-weighted
    average is exactly 1, so the system-wide mean offline gap stays `mean`.
    """
    shapes = rng.uniform(*shape_range, size=num_regions)
    u = rng.random(num_regions)
    if populations is None:
        w = np.full(num_regions, 1.0 / num_regions)
    else:
        w = np.asarray(populations, dtype=float)
        w = w / w.sum() if w.sum() > 0 else np.full(num_regions, 1.0 / num_regions)
    d = u - (w * u).sum()
    lo, hi = factor_range
    scale = np.inf
    if (d > 0).any():
        scale = min(scale, (hi - 1.0) / d.max())
    if (d < 0).any():
        scale = min(scale, (1.0 - lo) / -d.min())
    factors = np.ones(num_regions) if not np.isfinite(scale) else 1.0 + scale * d
    return [WeibullParams.from_mean(mean * f, s) for f, s in zip(factors, shapes)]
