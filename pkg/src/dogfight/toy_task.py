"""Heading-hold toy task for trainer smoke tests.

One aircraft is rewarded for flying a fixed heading at a fixed altitude.  A
frozen phantom aircraft far ahead fills the opponent block of the
observation, so the full trajectory/network stack runs unchanged.  Dense,
bounded reward; no weapons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (AircraftState, AirframeCoefficients, ControlCommand,
                       make_level_state, step_dynamics)
from .environment import StepResult, Termination
from .errors import ContractError
from .geometry import wrap_pi
from .units import KT_TO_FTS


@dataclass(frozen=True)
class HeadingHoldConfig:
    max_steps: int = 200
    step_rate_hz: float = 10.0
    target_heading_rad: float = 0.0
    target_altitude_ft: float = 15000.0
    speed_kt: float = 400.0
    heading_offset_rad: float = math.radians(60.0)
    altitude_offset_ft: float = 500.0
    floor_ft: float = 250.0

    @property
    def dt(self) -> float:
        return 1.0 / self.step_rate_hz


class HeadingHoldEnv:
    """Same stepping contract as the dogfight environment."""

    def __init__(self, config: HeadingHoldConfig | None = None,
                 airframe: AirframeCoefficients | None = None):
        self.config = config or HeadingHoldConfig()
        self.airframe = airframe or AirframeCoefficients.standard()
        self._own: AircraftState | None = None
        self._phantom: AircraftState | None = None
        self._step_index = 0
        self._done = False

    @property
    def step_index(self) -> int:
        return self._step_index

    def reset(self, seed: int | None = None) -> tuple[AircraftState, AircraftState]:
        rng = np.random.default_rng(seed)
        cfg = self.config
        heading = wrap_pi(cfg.target_heading_rad
                          + rng.uniform(-1, 1) * cfg.heading_offset_rad)
        altitude = cfg.target_altitude_ft + rng.uniform(-1, 1) * cfg.altitude_offset_ft
        self._own = make_level_state(np.array([0.0, 0.0, altitude]), heading,
                                     cfg.speed_kt * KT_TO_FTS, self.airframe)
        self._phantom = make_level_state(
            np.array([40000.0, 0.0, cfg.target_altitude_ft]),
            cfg.target_heading_rad, cfg.speed_kt * KT_TO_FTS, self.airframe)
        self._step_index = 0
        self._done = False
        return self._own, self._phantom

    def step(self, cmd: ControlCommand) -> StepResult:
        if self._own is None:
            raise ContractError("step() before reset()")
        if self._done:
            raise ContractError("step() after episode termination")
        cfg = self.config
        self._own = step_dynamics(self._own, cmd, cfg.dt, self.airframe)
        self._step_index += 1

        heading_err = abs(wrap_pi(self._own.pose.yaw - cfg.target_heading_rad))
        altitude_err = abs(self._own.altitude_ft() - cfg.target_altitude_ft)
        reward = (0.6 * (1.0 - min(2.0, heading_err / (math.pi / 4)))
                  + 0.4 * (1.0 - min(2.0, altitude_err / 1000.0)))

        termination = None
        if self._own.altitude_ft() < cfg.floor_ft:
            termination = Termination.CRASH_OWN
        elif self._step_index >= cfg.max_steps:
            termination = Termination.TIMEOUT
        self._done = termination is not None
        return StepResult(own=self._own, oppo=self._phantom,
                          reward_total=reward, breakdown=None,
                          termination=termination)
