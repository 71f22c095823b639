"""One-vs-one dogfight episodes: spawning, stepping, damage, termination.

Each step advances both aircraft, evaluates the engagement geometry from
both seats, applies weapon-zone damage (one life point per step inside the
zone), evaluates the shaped reward, and classifies termination.  Episodes
are bit-reproducible from the seed: the opponent policy and spawn draws use
dedicated child generators.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (AircraftState, AirframeCoefficients, ControlCommand,
                       make_level_state, step_dynamics)
from .errors import ConfigError, ContractError
from .geometry import GeometrySnapshot, angles, wez_contains
from .observations import v_z_normalized
from .rewards import RewardBreakdown, RewardConfig, RewardInputs, total_reward
from .units import FTS_TO_KT, KT_TO_FTS, specific_energy


class Termination(str, enum.Enum):
    OWN_WIN = "own_win"
    OPPO_WIN = "oppo_win"
    CRASH_OWN = "crash_own"
    CRASH_OPPO = "crash_oppo"
    TIMEOUT = "timeout"
    DRAW = "draw"

    def is_terminal_state(self) -> bool:
        """True when the environment itself ended (replay should not
        bootstrap); timeouts are truncations and do bootstrap."""
        return self is not Termination.TIMEOUT


@dataclass(frozen=True)
class EpisodeConfig:
    mode: str = "training"              # "training" | "evaluation"
    max_steps: int = 3000
    step_rate_hz: float = 10.0
    opponent_policy: str = "pure_pursuit"
    rng_seed: int = 0
    spawn_speed_kt: float = 500.0
    own_altitude_ft: float = 15000.0
    opponent_altitude_range_ft: tuple = (10000.0, 18000.0)
    spawn_range_ft: tuple = (5000.0, 30000.0)
    eval_separation_ft: float = 10000.0
    floor_ft: float = 250.0

    def __post_init__(self):
        if self.mode not in ("training", "evaluation"):
            raise ConfigError(f"unknown episode mode {self.mode!r}")
        if self.max_steps <= 0 or self.step_rate_hz <= 0:
            raise ConfigError("max_steps and step_rate_hz must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.step_rate_hz


def spawn(config: EpisodeConfig, rng: np.random.Generator,
          own_af: AirframeCoefficients,
          oppo_af: AirframeCoefficients) -> tuple[AircraftState, AircraftState]:
    """Initial aircraft pair for one episode.

    Training: ownship trimmed north at the configured altitude/speed, the
    opponent at a random bearing/distance/altitude/heading.  Evaluation:
    both exactly level and nose-on, closing head-to-head.
    """
    tas = config.spawn_speed_kt * KT_TO_FTS
    if config.mode == "training":
        own = make_level_state(
            np.array([0.0, 0.0, config.own_altitude_ft]), 0.0, tas, own_af)
        bearing = rng.uniform(0.0, 2.0 * math.pi)
        distance = rng.uniform(*config.spawn_range_ft)
        altitude = rng.uniform(*config.opponent_altitude_range_ft)
        heading = rng.uniform(-math.pi, math.pi)
        oppo = make_level_state(
            np.array([distance * math.cos(bearing),
                      distance * math.sin(bearing), altitude]),
            heading, tas, oppo_af)
        return own, oppo
    own = make_level_state(
        np.array([0.0, 0.0, config.own_altitude_ft]), 0.0, tas, own_af,
        trimmed=False)
    oppo = make_level_state(
        np.array([config.eval_separation_ft, 0.0, config.own_altitude_ft]),
        math.pi, tas, oppo_af, trimmed=False)
    return own, oppo


def apply_damage_and_terminate(own: AircraftState, oppo: AircraftState,
                               geo_own: GeometrySnapshot,
                               geo_oppo: GeometrySnapshot, step_index: int,
                               config: EpisodeConfig,
                               ) -> tuple[AircraftState, AircraftState,
                                          Termination | None]:
    """WEZ damage plus the episode-ending rules, in precedence order:
    mutual destruction, single destruction, crashes, timeout."""
    own, oppo = own.copy(), oppo.copy()
    if wez_contains(geo_own):
        oppo.life = max(0, oppo.life - 1)
    if wez_contains(geo_oppo):
        own.life = max(0, own.life - 1)

    if own.life == 0 and oppo.life == 0:
        return own, oppo, Termination.DRAW
    if oppo.life == 0:
        return own, oppo, Termination.OWN_WIN
    if own.life == 0:
        return own, oppo, Termination.OPPO_WIN
    own_crashed = own.altitude_ft() < config.floor_ft
    oppo_crashed = oppo.altitude_ft() < config.floor_ft
    if own_crashed and oppo_crashed:
        return own, oppo, Termination.DRAW
    if own_crashed:
        return own, oppo, Termination.CRASH_OWN
    if oppo_crashed:
        return own, oppo, Termination.CRASH_OPPO
    if step_index >= config.max_steps:
        return own, oppo, Termination.TIMEOUT
    return own, oppo, None


@dataclass
class StepResult:
    own: AircraftState
    oppo: AircraftState
    reward_total: float
    breakdown: RewardBreakdown | None
    termination: Termination | None
    wez_own: bool = False
    wez_oppo: bool = False
    geometry: GeometrySnapshot | None = None


class DogfightEnv:
    """Two-aircraft engagement with a scripted opponent."""

    def __init__(self, config: EpisodeConfig,
                 own_airframe: AirframeCoefficients | None = None,
                 oppo_airframe: AirframeCoefficients | None = None,
                 reward_config: RewardConfig | None = None):
        self.config = config
        self.own_airframe = own_airframe or AirframeCoefficients.standard()
        self.oppo_airframe = oppo_airframe or AirframeCoefficients.standard()
        self.reward_config = reward_config or RewardConfig()
        self._own: AircraftState | None = None
        self._oppo: AircraftState | None = None
        self._opponent = None
        self._step_index = 0
        self._done = False

    @property
    def step_index(self) -> int:
        return self._step_index

    @property
    def states(self) -> tuple[AircraftState, AircraftState]:
        return self._own, self._oppo

    def reset(self, seed: int | None = None) -> tuple[AircraftState, AircraftState]:
        from .opponents import make_opponent
        root = np.random.SeedSequence(
            self.config.rng_seed if seed is None else seed)
        spawn_seq, opponent_seq = root.spawn(2)
        self._own, self._oppo = spawn(self.config,
                                      np.random.default_rng(spawn_seq),
                                      self.own_airframe, self.oppo_airframe)
        self._opponent = make_opponent(self.config.opponent_policy,
                                       np.random.default_rng(opponent_seq),
                                       self.oppo_airframe)
        self._step_index = 0
        self._done = False
        return self._own, self._oppo

    def step(self, cmd: ControlCommand) -> StepResult:
        if self._own is None:
            raise ContractError("step() before reset()")
        if self._done:
            raise ContractError("step() after episode termination")
        oppo_cmd = self._opponent.command(self._oppo, self._own,
                                          self._step_index)
        dt = self.config.dt
        own = step_dynamics(self._own, cmd, dt, self.own_airframe)
        oppo = step_dynamics(self._oppo, oppo_cmd, dt, self.oppo_airframe)
        self._step_index += 1

        geo_own = angles(own.pose, oppo.pose)
        geo_oppo = angles(oppo.pose, own.pose)
        wez_own = wez_contains(geo_own)
        wez_oppo = wez_contains(geo_oppo)
        own, oppo, termination = apply_damage_and_terminate(
            own, oppo, geo_own, geo_oppo, self._step_index, self.config)

        breakdown = total_reward(RewardInputs(
            deviation_deg=geo_own.deviation_deg,
            range_ft=geo_own.range_ft,
            horizontal_deg=geo_own.horizontal_deg,
            own_wez_hit=wez_own,
            oppo_wez_hit=wez_oppo,
            altitude_ft=own.altitude_ft(),
            v_z_norm=v_z_normalized(own),
            aoa_deg=own.aoa_deg,
            energy_ft=specific_energy(own.altitude_ft(), own.tas_fts),
        ), self.reward_config)

        self._own, self._oppo = own, oppo
        self._done = termination is not None
        return StepResult(own=own, oppo=oppo, reward_total=breakdown.total,
                          breakdown=breakdown, termination=termination,
                          wez_own=wez_own, wez_oppo=wez_oppo,
                          geometry=geo_own)


def _aircraft_record(state: AircraftState) -> dict:
    return {
        "position": [round(float(v), 3) for v in state.pose.position_e],
        "attitude_deg": [round(math.degrees(state.pose.roll), 4),
                         round(math.degrees(state.pose.pitch), 4),
                         round(math.degrees(state.pose.yaw), 4)],
        "tas_kt": round(state.tas_fts * FTS_TO_KT, 3),
        "aoa_deg": round(state.aoa_deg, 4),
        "life": state.life,
    }


def step_trace_record(step_index: int, dt: float, result: StepResult) -> dict:
    """One JSON-lines record of the episode trace schema."""
    b = result.breakdown
    return {
        "step": step_index,
        "sim_time_s": round(step_index * dt, 6),
        "own": _aircraft_record(result.own),
        "oppo": _aircraft_record(result.oppo),
        "geometry": {
            "range_ft": round(result.geometry.range_ft, 3),
            "deviation_deg": round(result.geometry.deviation_deg, 4),
            "elevation_deg": round(result.geometry.elevation_deg, 4),
            "horizontal_deg": round(result.geometry.horizontal_deg, 4),
        },
        "rewards": {f"r{i}": round(term, 6)
                    for i, term in enumerate(b.terms(), start=1)},
        "total_reward": round(b.total, 6),
        "wez": {"own": result.wez_own, "oppo": result.wez_oppo},
        "termination": result.termination.value if result.termination else None,
    }
