"""Scripted opponent behaviors standing in for built-in simulator AI.

Each policy is a small stateful controller instantiated per episode; given
the opponent's own state and the adversary's state it emits a
``ControlCommand``.  All randomness comes from the generator handed in at
construction, so episodes replay bit-identically from a seed.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import AircraftState, ControlCommand, trim_level_flight
from .errors import ConfigError
from .geometry import earth_to_body, wrap_pi

OPPONENT_POLICIES = ("pure_pursuit", "lag_pursuit", "evasive_weave",
                     "level_cruise", "random")


def _clip(v: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return min(hi, max(lo, v))


def _steer_towards(me: AircraftState, aim_point: np.ndarray,
                   throttle: float, floor_ft: float = 1500.0) -> ControlCommand:
    """Bank-to-turn steering toward an earth-frame point.

    Protections keep the scripted flying honest: the pull fades as AoA
    approaches stall, the throttle opens when slow, and near the ground the
    aircraft levels its wings and climbs instead of chasing.
    """
    if me.altitude_ft() < floor_ft and me.vertical_speed_fts() < 50.0:
        aileron = _clip(2.0 * wrap_pi(-me.pose.roll))
        return ControlCommand(aileron, 1.0, 0.0, 1.0)
    d = aim_point - me.pose.position_e
    dist = float(np.linalg.norm(d))
    if dist < 1.0:
        return ControlCommand(0.0, 0.0, 0.0, 2.0 * throttle - 1.0)
    db = earth_to_body(d / dist, me.pose)       # (fwd, right, belly)
    azimuth = math.atan2(db[1], db[0])
    elevation = math.atan2(-db[2], max(0.05, abs(db[0])))
    near = _clip((dist - 1500.0) / 4000.0, 0.0, 1.0)  # 0 close in, 1 far out
    if db[0] < 0.0:
        # target behind: roll hard toward its side and pull
        roll_target = math.copysign(math.radians(80.0), db[1] if db[1] != 0 else 1.0)
        pull = 0.9
    else:
        roll_limit = math.radians(50.0 + 30.0 * near)
        roll_target = _clip((1.5 + 1.0 * near) * azimuth, -roll_limit, roll_limit)
        pull = _clip((2.5 + 0.5 * near) * elevation + 0.15 * abs(azimuth))
    # sustained-AoA limiter: fast turns below ~14 deg AoA keep drag near
    # thrust, so the script turns slower but arrives with energy
    if pull > 0.0:
        pull *= _clip((14.0 - me.aoa_deg) / 8.0, 0.0, 1.0)
    elif pull < 0.0:
        pull *= _clip((me.aoa_deg + 12.0) / 8.0, 0.0, 1.0)
    if me.tas_fts < 650.0:   # ~385 kt: keep energy up before maneuvering hard
        throttle = max(throttle, 0.95)
        pull = _clip(pull, -0.3, 0.3)
    aileron = _clip(2.0 * wrap_pi(roll_target - me.pose.roll))
    rudder = _clip(0.5 * azimuth)
    return ControlCommand(aileron, pull, rudder, 2.0 * throttle - 1.0)


def _chase_throttle(me: AircraftState, target: AircraftState,
                    rng_ft: float) -> float:
    """Close when far, matching speeds near gun range.

    The allowed overtake follows a braking-feasible profile (idle-drag
    deceleration ~8 ft/s^2), so the script stops barreling through the
    engagement band.
    """
    excess = max(0.0, rng_ft - 1200.0)
    v_des = target.tas_fts + _clip(4.0 * math.sqrt(excess) - 80.0 * (excess == 0.0),
                                   -80.0, 520.0)
    if rng_ft < 1200.0:
        v_des = target.tas_fts - 40.0
    return _clip(0.5 + (v_des - me.tas_fts) / 150.0, 0.05, 1.0)


class PurePursuit:
    """Points the nose straight at the adversary's position."""

    def __init__(self, rng: np.random.Generator, airframe):
        self.airframe = airframe

    def command(self, me: AircraftState, target: AircraftState,
                step: int) -> ControlCommand:
        rng_ft = float(np.linalg.norm(target.pose.position_e - me.pose.position_e))
        throttle = _chase_throttle(me, target, rng_ft)
        return _steer_towards(me, target.pose.position_e, throttle)


class LagPursuit:
    """Aims at a point trailing the adversary to avoid overshoot."""

    TRAIL_FT = 1500.0

    def __init__(self, rng: np.random.Generator, airframe):
        self.airframe = airframe

    def command(self, me: AircraftState, target: AircraftState,
                step: int) -> ControlCommand:
        from .geometry import heading_vector
        rng_ft = float(np.linalg.norm(target.pose.position_e - me.pose.position_e))
        aim = target.pose.position_e - self.TRAIL_FT * heading_vector(target.pose)
        throttle = _chase_throttle(me, target, rng_ft)
        return _steer_towards(me, aim, throttle)


class EvasiveWeave:
    """Alternating climbing/descending turns on a fixed period."""

    HALF_PERIOD_STEPS = 40

    def __init__(self, rng: np.random.Generator, airframe):
        self.airframe = airframe
        self.first_sign = 1.0 if rng.random() < 0.5 else -1.0

    def command(self, me: AircraftState, target: AircraftState,
                step: int) -> ControlCommand:
        phase = (step // self.HALF_PERIOD_STEPS) % 2
        sign = self.first_sign if phase == 0 else -self.first_sign
        roll_target = sign * math.radians(60.0)
        pitch_target = sign * math.radians(8.0)
        aileron = _clip(2.0 * wrap_pi(roll_target - me.pose.roll))
        elevator = _clip(2.0 * (pitch_target - me.pose.pitch) + 0.3)
        return ControlCommand(aileron, elevator, 0.0, 0.6)


class LevelCruise:
    """Holds the spawn heading, altitude, and airspeed."""

    def __init__(self, rng: np.random.Generator, airframe):
        self.airframe = airframe
        self.reference: tuple[float, float, float] | None = None

    def command(self, me: AircraftState, target: AircraftState,
                step: int) -> ControlCommand:
        if self.reference is None:
            self.reference = (me.pose.yaw, me.altitude_ft(), me.tas_fts)
        yaw0, alt0, tas0 = self.reference
        trim = trim_level_flight(max(me.tas_fts, 200.0), me.altitude_ft(),
                                 self.airframe)
        roll_target = _clip(1.5 * wrap_pi(yaw0 - me.pose.yaw),
                            -math.radians(30), math.radians(30))
        aileron = _clip(2.0 * wrap_pi(roll_target - me.pose.roll))
        pitch_target = trim.aoa_rad + _clip(
            0.002 * (alt0 - me.altitude_ft()) - 0.004 * me.vertical_speed_fts(),
            -math.radians(10), math.radians(10))
        elevator = _clip(3.0 * (pitch_target - me.pose.pitch))
        throttle = _clip(trim.throttle + 0.002 * (tas0 - me.tas_fts), 0.0, 1.0)
        return ControlCommand(aileron, elevator, 0.0, 2.0 * throttle - 1.0)


class RandomPolicy:
    """Smoothed random commands from the episode's RNG stream."""

    def __init__(self, rng: np.random.Generator, airframe):
        self.rng = rng
        self.airframe = airframe
        self.smooth = np.zeros(4)

    def command(self, me: AircraftState, target: AircraftState,
                step: int) -> ControlCommand:
        self.smooth = 0.92 * self.smooth + 0.08 * self.rng.uniform(-1, 1, 4) * 4.0
        c = np.clip(self.smooth, -1.0, 1.0)
        return ControlCommand(float(c[0]), float(0.5 * c[1]), float(0.3 * c[2]),
                              float(0.3 + 0.5 * c[3]))


_POLICY_CLASSES = {
    "pure_pursuit": PurePursuit,
    "lag_pursuit": LagPursuit,
    "evasive_weave": EvasiveWeave,
    "level_cruise": LevelCruise,
    "random": RandomPolicy,
}


def make_opponent(name: str, rng: np.random.Generator, airframe):
    try:
        cls = _POLICY_CLASSES[name]
    except KeyError:
        raise ConfigError(f"unknown opponent policy {name!r}; choose from "
                          f"{sorted(_POLICY_CLASSES)}") from None
    return cls(rng, airframe)
