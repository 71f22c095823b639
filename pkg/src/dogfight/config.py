"""Run configuration: one JSON document, strictly validated.

Sections: ``network`` (dims/architecture), ``trainer`` (SAC
hyperparameters), ``reward`` (weights and constants), ``environment``
(episode and airframe coefficients), ``run`` (episode counts, seeds, output
paths).  Unknown keys anywhere are rejected with the offending path.
"""

from __future__ import annotations

import dataclasses
import functools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import AirframeCoefficients
from .environment import EpisodeConfig
from .errors import ConfigError
from .policy import NetworkConfig
from .rewards import RewardConfig, pursuit_score
from .units import ENERGY_REF_FT, ENERGY_TARGET_FT


@dataclass(frozen=True)
class TrainerSection:
    gamma: float = 0.99
    tau: float = 0.005
    lr_q: float = 3e-4
    lr_pi: float = 3e-4
    lr_alpha: float = 3e-4
    batch_size: int = 256
    replay_capacity: int = 1_000_000
    updates_per_episode: int | None = None   # None: steps_collected / interval
    update_interval_steps: int = 1
    target_entropy: float = -4.0
    init_alpha: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.batch_size < 1 or self.replay_capacity < 1:
            raise ConfigError("batch_size and replay_capacity must be >= 1")
        if self.update_interval_steps < 1:
            raise ConfigError("update_interval_steps must be >= 1")


@dataclass(frozen=True)
class RewardSection:
    weights: tuple = (1.0, 0.5, 10.0, 10.0, 2.0, 1.0, 0.2)
    z_min_ft: float = 250.0
    z_low_ft: float = 1000.0
    energy_ref_ft: float = ENERGY_REF_FT
    energy_target_ft: float = ENERGY_TARGET_FT
    pursuit_zero_crossing_deg: float = 30.0
    pursuit_desired_range_ft: float = 1000.0
    pursuit_range_width_ft: float = 1500.0

    def __post_init__(self):
        if len(self.weights) != 7:
            raise ConfigError(f"reward weights must have 7 entries, got "
                              f"{len(self.weights)}")

    def build(self) -> RewardConfig:
        fn = functools.partial(
            pursuit_score,
            zero_crossing_deg=self.pursuit_zero_crossing_deg,
            desired_range_ft=self.pursuit_desired_range_ft,
            range_width_ft=self.pursuit_range_width_ft)
        return RewardConfig(weights=tuple(self.weights),
                            z_min_ft=self.z_min_ft, z_low_ft=self.z_low_ft,
                            energy_ref_ft=self.energy_ref_ft,
                            energy_target_ft=self.energy_target_ft,
                            pursuit_fn=fn)


@dataclass(frozen=True)
class EnvironmentSection:
    max_steps: int = 3000
    step_rate_hz: float = 10.0
    opponent_policy: str = "pure_pursuit"
    aggressor_opponent: bool = False
    spawn_speed_kt: float = 500.0
    own_altitude_ft: float = 15000.0
    opponent_altitude_range_ft: tuple = (10000.0, 18000.0)
    spawn_range_ft: tuple = (5000.0, 30000.0)
    eval_separation_ft: float = 10000.0
    floor_ft: float = 250.0
    own_airframe: dict = field(default_factory=dict)
    oppo_airframe: dict = field(default_factory=dict)

    def build_airframes(self) -> tuple[AirframeCoefficients, AirframeCoefficients]:
        own = _override_airframe(AirframeCoefficients.standard(),
                                 self.own_airframe, "environment.own_airframe")
        base = (AirframeCoefficients.aggressor() if self.aggressor_opponent
                else AirframeCoefficients.standard())
        oppo = _override_airframe(base, self.oppo_airframe,
                                  "environment.oppo_airframe")
        return own, oppo

    def episode_config(self, mode: str, seed: int) -> EpisodeConfig:
        return EpisodeConfig(
            mode=mode, max_steps=self.max_steps,
            step_rate_hz=self.step_rate_hz,
            opponent_policy=self.opponent_policy, rng_seed=seed,
            spawn_speed_kt=self.spawn_speed_kt,
            own_altitude_ft=self.own_altitude_ft,
            opponent_altitude_range_ft=tuple(self.opponent_altitude_range_ft),
            spawn_range_ft=tuple(self.spawn_range_ft),
            eval_separation_ft=self.eval_separation_ft,
            floor_ft=self.floor_ft)


@dataclass(frozen=True)
class RunSection:
    task: str = "dogfight"              # "dogfight" | "heading_hold"
    episodes: int = 100
    eval_every: int = 10
    eval_episodes: int = 4
    checkpoint_every: int = 50
    out_dir: str = "runs/dogfight"
    seed: int = 0

    def __post_init__(self):
        if self.task not in ("dogfight", "heading_hold"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.episodes < 1 or self.eval_every < 1:
            raise ConfigError("episodes and eval_every must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    trainer: TrainerSection = field(default_factory=TrainerSection)
    reward: RewardSection = field(default_factory=RewardSection)
    environment: EnvironmentSection = field(default_factory=EnvironmentSection)
    run: RunSection = field(default_factory=RunSection)


def _override_airframe(base: AirframeCoefficients, overrides: dict,
                       path: str) -> AirframeCoefficients:
    if not overrides:
        return base
    valid = {f.name for f in dataclasses.fields(AirframeCoefficients)}
    unknown = set(overrides) - valid
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {path}")
    return dataclasses.replace(base, **overrides)


def _coerce(value, target_type):
    if isinstance(value, list):
        return tuple(value)
    return value


def _build_section(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {path}")
    kwargs = {k: _coerce(v, None) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_SECTIONS = {
    "network": NetworkConfig,
    "trainer": TrainerSection,
    "reward": RewardSection,
    "environment": EnvironmentSection,
    "run": RunSection,
}


def run_config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a JSON object")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    sections = {name: _build_section(cls, data.get(name, {}), name)
                for name, cls in _SECTIONS.items()}
    return RunConfig(**sections)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return run_config_from_dict(data)


def run_config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        out[name] = dataclasses.asdict(section)
    return out
