"""Scenario configuration and YAML loading."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

STRATEGIES = ("pyramid", "glaras", "random", "poc", "cluster", "correlation")
OUTPUT_ENV_VAR = "PYRAMID_SIM_OUT"


class ConfigError(ValueError):
    """Raised for invalid or unreadable scenario configurations."""


@dataclass(frozen=True)
class ChurnConfig:
    session_mean_hours: float = 2.7
    session_shape: float = 0.6
    offline_mean_hours: float = 2.8
    # per-region inter-arrival shapes and mean factors are drawn inside these ranges
    interarrival_shape_range: tuple[float, float] = (0.5, 1.0)
    region_factor_range: tuple[float, float] = (0.7, 1.3)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 512
    num_landmarks: int = 8
    vs_size: int | None = None
    name_id_bits: int | None = None
    rtt_scale: float = 100.0
    alpha: int = 3
    fpti_slots: int = 24
    ts_hours: float = 1.0
    horizon_hours: float = 720.0
    learning_hours: float = 168.0
    num_owners: int = 10
    replication_degrees: tuple[int, ...] = (2, 4, 6, 8, 10, 12, 14)
    strategies: tuple[str, ...] = STRATEGIES
    churn: ChurnConfig = field(default_factory=ChurnConfig)
    bandwidth_mean_kbps: float = 2000.0
    bw_max_factor: float = 10.0
    storage_range: tuple[int, int] = (1, 3)
    piggyback_factor: float = 4.0
    piggyback_budget: int | None = None
    cost_constant: float = 1.0
    allow_owner_replica: bool = True
    shared_world: bool = False
    seeds: tuple[int, ...] = (1,)
    output_dir: str | None = None

    def __post_init__(self):
        validate(self)

    # -- derived quantities ------------------------------------------------

    @property
    def effective_vs_size(self) -> int:
        if self.vs_size is not None:
            return self.vs_size
        return max(1, round(1.33 * math.log2(self.n)))

    @property
    def virtual_bits(self) -> int:
        return max(0, math.ceil(math.log2(self.effective_vs_size)))

    @property
    def effective_name_id_bits(self) -> int:
        if self.name_id_bits is not None:
            return self.name_id_bits
        return max(math.ceil(math.log2(self.n)), self.virtual_bits, 1)

    @property
    def num_slots(self) -> int:
        return int(round(self.horizon_hours / self.ts_hours))

    @property
    def learning_slots(self) -> int:
        return int(round(self.learning_hours / self.ts_hours))

    @property
    def fpti_hours(self) -> float:
        return self.fpti_slots * self.ts_hours

    @property
    def bw_max_kbps(self) -> float:
        return self.bw_max_factor * self.bandwidth_mean_kbps

    @property
    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV_VAR, "results"))

    def with_overrides(self, **kw: Any) -> ScenarioConfig:
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **_coerce(kw)) if kw else self

    def to_dict(self) -> dict[str, Any]:
        return _plain(asdict(self))


def validate(cfg: ScenarioConfig) -> None:
    def need(cond: bool, msg: str):
        if not cond:
            raise ConfigError(msg)

    need(cfg.n >= 2, f"n must be >= 2, got {cfg.n}")
    need(cfg.num_landmarks >= 1, f"num_landmarks must be >= 1, got {cfg.num_landmarks}")
    need(cfg.vs_size is None or cfg.vs_size >= 1, "vs_size must be >= 1")
    need(cfg.alpha >= 1, "alpha must be >= 1")
    need(cfg.fpti_slots >= 1 and cfg.ts_hours > 0, "fpti_slots and ts_hours must be positive")
    need(cfg.horizon_hours > 0, "horizon_hours must be positive")
    need(0 < cfg.learning_hours < cfg.horizon_hours, "need 0 < learning_hours < horizon_hours")
    need(1 <= cfg.num_owners <= cfg.n, "num_owners must be in [1, n]")
    need(len(cfg.replication_degrees) > 0, "replication_degrees is empty")
    need(all(r >= 1 for r in cfg.replication_degrees), "replication degrees must be >= 1")
    unknown = set(cfg.strategies) - set(STRATEGIES)
    need(not unknown, f"unknown strategies {sorted(unknown)}; choose from {STRATEGIES}")
    need(len(cfg.strategies) > 0, "strategies is empty")
    need(cfg.bandwidth_mean_kbps > 0 and cfg.bw_max_factor > 0, "bandwidth params must be positive")
    lo, hi = cfg.storage_range
    need(1 <= lo <= hi, "storage_range must satisfy 1 <= lo <= hi")
    need(cfg.effective_name_id_bits >= cfg.virtual_bits, "name_id_bits < ceil(log2 vs_size)")
    need(cfg.name_id_bits is None or cfg.name_id_bits <= 62, "name_id_bits must be <= 62")
    need(len(cfg.seeds) >= 1, "at least one seed is required")
    ch = cfg.churn
    need(ch.session_mean_hours > 0 and ch.offline_mean_hours > 0, "churn means must be positive")
    need(ch.session_shape > 0, "session_shape must be positive")
    need(0 < ch.interarrival_shape_range[0] <= ch.interarrival_shape_range[1], "bad shape range")
    need(0 < ch.region_factor_range[0] <= 1 <= ch.region_factor_range[1], "bad region factor range")


_TUPLE_FIELDS = {"replication_degrees", "strategies", "storage_range", "seeds"}


def _coerce(d: dict[str, Any]) -> dict[str, Any]:
    out = dict(d)
    for k in _TUPLE_FIELDS & out.keys():
        v = out[k]
        out[k] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
    if isinstance(out.get("churn"), dict):
        churn = dict(out["churn"])
        allowed = {f.name for f in fields(ChurnConfig)}
        bad = set(churn) - allowed
        if bad:
            raise ConfigError(f"unknown churn keys: {sorted(bad)}")
        for k in ("interarrival_shape_range", "region_factor_range"):
            if k in churn:
                churn[k] = tuple(churn[k])
        out["churn"] = ChurnConfig(**churn)
    return out


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def from_dict(d: dict[str, Any]) -> ScenarioConfig:
    allowed = {f.name for f in fields(ScenarioConfig)}
    # the optional "profile" key picks a base preset that the remaining keys override
    d = dict(d or {})
    base = PROFILES.get(d.pop("profile", "desk"))
    if base is None:
        raise ConfigError(f"unknown profile; choose from {sorted(PROFILES)}")
    bad = set(d) - allowed
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    try:
        return replace(base, **_coerce(d))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return from_dict(data or {})


PROFILES: dict[str, ScenarioConfig] = {
    "desk": ScenarioConfig(),
    "full": ScenarioConfig(n=4096, horizon_hours=2160.0, seeds=(1, 2, 3, 4, 5)),
}
