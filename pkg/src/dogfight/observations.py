"""Normalized 33-D observations and the dual-resolution history buffer.

The observation packs 13 ownship aerodynamic features, 16 opponent-relative
features, and the previous action.  Every entry is affinely mapped from its
documented physical range into [-1, 1] and clamped.

The history buffer is a fixed FIFO of ``long_len * stride`` observations.
The short view is the last ``short_len`` rows at single-step resolution; the
long view samples every ``stride``-th row.  Both end at the current state and
are ordered oldest to newest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AircraftState, ControlCommand, euler_rates
from .errors import ContractError, DimensionError, WarmupError
from .geometry import (GeometrySnapshot, angles, body_to_earth_matrix,
                       los_vector)
from .units import ENERGY_REF_FT, KT_TO_FTS, specific_energy

OWN_DIM = 13
OPPO_DIM = 16
ACTION_DIM = 4
STATE_DIM = OWN_DIM + OPPO_DIM + ACTION_DIM  # 33

# per-feature physical ranges, mapped affinely onto [-1, 1]
_PI = math.pi
_RANGES = [
    (0.0, 1000.0 * KT_TO_FTS),      # true airspeed, ft/s
    (-321.74, 321.74),              # longitudinal specific force, +-10 g
    (-321.74, 321.74),              # vertical specific force, +-10 g
    (-_PI, _PI),                    # roll
    (-_PI / 2, _PI / 2),            # pitch
    (-_PI, _PI),                    # roll rate, rad/s
    (-_PI, _PI),                    # pitch rate
    (-_PI, _PI),                    # yaw rate
    (-90.0, 90.0),                  # AoA, deg
    (-90.0, 90.0),                  # sideslip, deg
    (0.0, ENERGY_REF_FT),           # specific energy, ft
    (0.0, 40000.0),                 # altitude, ft
    (-1000.0, 1000.0),              # vertical speed, ft/s
    (-30000.0, 30000.0),            # relative position, earth frame (3)
    (-30000.0, 30000.0),
    (-30000.0, 30000.0),
    (-30000.0, 30000.0),            # relative position, body frame (3)
    (-30000.0, 30000.0),
    (-30000.0, 30000.0),
    (-_PI, _PI),                    # relative orientation roll
    (-_PI / 2, _PI / 2),            # relative orientation pitch
    (-_PI, _PI),                    # relative orientation yaw
    (0.0, 180.0),                   # deviation, deg
    (0.0, 180.0),                   # aspect
    (0.0, 180.0),                   # angle-off
    (0.0, 180.0),                   # horizontal
    (0.0, 180.0),                   # elevation
    (0.0, 20.0),                    # ownship life
    (0.0, 20.0),                    # opponent life
    (-1.0, 1.0),                    # previous action (4)
    (-1.0, 1.0),
    (-1.0, 1.0),
    (-1.0, 1.0),
]
_LO = np.array([r[0] for r in _RANGES])
_HI = np.array([r[1] for r in _RANGES])
assert len(_RANGES) == STATE_DIM


def normalize_features(raw: np.ndarray) -> np.ndarray:
    """Affine map of each feature onto [-1, 1], clamped."""
    return np.clip(2.0 * (raw - _LO) / (_HI - _LO) - 1.0, -1.0, 1.0)


def clamp_unit(vec: np.ndarray) -> np.ndarray:
    """The output-side clamp; stable on already-normalized vectors."""
    return np.clip(vec, -1.0, 1.0)


def v_z_normalized(state: AircraftState) -> float:
    """Vertical speed on the observation's [-1, 1] scale (for the reward)."""
    return float(np.clip(state.vertical_speed_fts() / 1000.0, -1.0, 1.0))


def _relative_euler(own: AircraftState, oppo: AircraftState):
    r_own = body_to_earth_matrix(own.pose.roll, own.pose.pitch, own.pose.yaw)
    r_oppo = body_to_earth_matrix(oppo.pose.roll, oppo.pose.pitch, oppo.pose.yaw)
    rel = r_own.T @ r_oppo          # opponent body axes in ownship body axes
    pitch = -math.asin(min(1.0, max(-1.0, rel[2, 0])))
    roll = math.atan2(rel[2, 1], rel[2, 2])
    yaw = math.atan2(rel[1, 0], rel[0, 0])
    return roll, pitch, yaw


def build_state(own: AircraftState, oppo: AircraftState,
                prev_action: ControlCommand,
                geometry: GeometrySnapshot | None = None) -> np.ndarray:
    """Assemble and normalize the full 33-D observation.

    ``geometry`` may be passed in when the caller already computed the
    snapshot for this step.
    """
    if not (own.is_finite() and oppo.is_finite()):
        raise ContractError("build_state: non-finite aircraft state")
    snap = geometry if geometry is not None else angles(own.pose, oppo.pose)

    rates = euler_rates(own)
    energy = specific_energy(own.altitude_ft(), own.tas_fts)
    rel_e = los_vector(own.pose, oppo.pose)
    r_own = body_to_earth_matrix(own.pose.roll, own.pose.pitch, own.pose.yaw)
    rel_b = r_own.T @ rel_e
    rel_roll, rel_pitch, rel_yaw = _relative_euler(own, oppo)

    raw = np.empty(STATE_DIM)
    raw[0] = own.tas_fts
    raw[1] = own.accel_body[0]
    raw[2] = own.accel_body[1]
    raw[3] = own.pose.roll
    raw[4] = own.pose.pitch
    raw[5:8] = rates
    raw[8] = own.aoa_deg
    raw[9] = own.sideslip_deg
    raw[10] = energy
    raw[11] = own.altitude_ft()
    raw[12] = own.vertical_speed_fts()
    raw[13:16] = rel_e
    raw[16:19] = rel_b
    raw[19] = rel_roll
    raw[20] = rel_pitch
    raw[21] = rel_yaw
    raw[22] = snap.deviation_deg
    raw[23] = snap.aspect_deg
    raw[24] = snap.angle_off_deg
    raw[25] = snap.horizontal_deg
    raw[26] = snap.elevation_deg
    raw[27] = own.life
    raw[28] = oppo.life
    raw[29:33] = prev_action.as_array()
    return normalize_features(raw)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Lengths of the dense/sparse views and the sparse stride."""

    short_len: int = 8
    long_len: int = 8
    stride: int = 8

    def __post_init__(self):
        if min(self.short_len, self.long_len, self.stride) < 1:
            raise DimensionError("trajectory lengths and stride must be >= 1")
        if self.short_len > self.capacity:
            raise DimensionError(f"short_len {self.short_len} exceeds buffer "
                                 f"capacity {self.capacity}")

    @property
    def capacity(self) -> int:
        return self.long_len * self.stride


class HistoryBuffer:
    """Fixed-capacity FIFO of observations with dual-resolution views."""

    def __init__(self, config: TrajectoryConfig):
        self.config = config
        self._data = np.zeros((config.capacity, STATE_DIM))
        self._count = 0

    def __len__(self) -> int:
        return min(self._count, self.config.capacity)

    @property
    def full(self) -> bool:
        return self._count >= self.config.capacity

    def clear(self) -> None:
        self._count = 0

    def push(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (STATE_DIM,):
            raise DimensionError(f"push: expected ({STATE_DIM},), got {x.shape}")
        if self._count < self.config.capacity:
            self._data[self._count] = x
            self._count += 1
        else:
            self._data[:-1] = self._data[1:]
            self._data[-1] = x

    def newest(self) -> np.ndarray:
        if self._count == 0:
            raise WarmupError("history buffer is empty")
        return self._data[min(self._count, self.config.capacity) - 1].copy()

    def _require_full(self, what: str) -> None:
        if not self.full:
            raise WarmupError(f"{what} requested with {len(self)} of "
                              f"{self.config.capacity} warm-up entries")

    def short_view(self) -> np.ndarray:
        """Last ``short_len`` rows, single-step resolution, oldest first."""
        self._require_full("short view")
        return self._data[-self.config.short_len:].copy()

    def long_view(self) -> np.ndarray:
        """Every ``stride``-th row, ending at the current state, oldest first."""
        self._require_full("long view")
        return self._data[self.config.stride - 1::self.config.stride].copy()

    def as_matrix(self) -> np.ndarray:
        """Full buffer contents, oldest first (for oracle comparisons)."""
        return self._data[:len(self)].copy()
