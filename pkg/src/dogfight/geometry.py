"""Combat geometry: line of sight, pursuit angles, weapon engagement zone.

Frames: the earth frame is X north, Y east, Z up.  Body axes follow the
aeronautical convention (x out the nose, y out the right wing, z down);
attitude is yaw -> pitch -> roll.  Angles cross the module boundary in
degrees; radians are internal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError

WEZ_CONE_DEG = 2.0
WEZ_MIN_RANGE_FT = 500.0
WEZ_MAX_RANGE_FT = 3000.0


def wrap_pi(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped <= -math.pi else wrapped


@dataclass
class Pose:
    """Rigid-body pose: position/velocity in the earth frame, Euler attitude."""

    position_e: np.ndarray
    roll: float
    pitch: float
    yaw: float
    velocity_e: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position_e = np.asarray(self.position_e, dtype=np.float64)
        self.velocity_e = np.asarray(self.velocity_e, dtype=np.float64)


def body_to_earth_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Columns are the body axes (nose, right wing, belly) in N/E/Up coords.

    Built as the yaw-pitch-roll direction cosine matrix in north-east-down
    axes, then reflected to the Z-up earth frame.
    """
    cphi, sphi = math.cos(roll), math.sin(roll)
    cth, sth = math.cos(pitch), math.sin(pitch)
    cpsi, spsi = math.cos(yaw), math.sin(yaw)
    r_ned = np.array([
        [cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi],
        [cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi],
        [-sth,       sphi * cth,                      cphi * cth],
    ])
    r_ned[2, :] *= -1.0  # down -> up
    return r_ned


def heading_vector(pose: Pose) -> np.ndarray:
    """Unit body x-axis in the earth frame."""
    return body_to_earth_matrix(pose.roll, pose.pitch, pose.yaw)[:, 0]


def earth_to_body(v_earth: np.ndarray, pose: Pose) -> np.ndarray:
    return body_to_earth_matrix(pose.roll, pose.pitch, pose.yaw).T @ v_earth


@dataclass
class GeometrySnapshot:
    """All pursuit angles (degrees) plus the raw line of sight (feet)."""

    los: np.ndarray
    range_ft: float
    deviation_deg: float    # ownship heading vs line of sight
    aspect_deg: float       # opponent heading vs line of sight
    angle_off_deg: float    # ownship heading vs opponent heading
    horizontal_deg: float   # headings/LOS projected onto the horizontal plane
    elevation_deg: float    # line of sight vs its horizontal projection


def los_vector(own: Pose, oppo: Pose) -> np.ndarray:
    """Vector from ownship to opponent, earth frame."""
    return oppo.position_e - own.position_e


def _angle_between(a: np.ndarray, b: np.ndarray) -> float:
    den = float(np.linalg.norm(a) * np.linalg.norm(b))
    cosang = float(np.dot(a, b)) / den
    return math.acos(min(1.0, max(-1.0, cosang)))


def angles(own: Pose, oppo: Pose) -> GeometrySnapshot:
    """Compute all five pursuit angles between two poses.

    Degenerate conventions: a purely vertical line of sight has
    elevation := 90 deg and horizontal := 0 deg; a purely vertical ownship
    heading also yields horizontal := 0 deg.  Coincident aircraft raise
    ``DegenerateGeometryError``.
    """
    rho = los_vector(own, oppo)
    rng = float(np.linalg.norm(rho))
    if rng == 0.0:
        raise DegenerateGeometryError("coincident aircraft: line of sight undefined")
    x_own = heading_vector(own)
    x_oppo = heading_vector(oppo)
    deviation = _angle_between(x_own, rho)
    aspect = _angle_between(x_oppo, rho)
    angle_off = _angle_between(x_own, x_oppo)

    rho_proj = np.array([rho[0], rho[1], 0.0])
    proj_norm = float(np.linalg.norm(rho_proj))
    if proj_norm == 0.0:
        elevation = 0.5 * math.pi
        horizontal = 0.0
    else:
        elevation = _angle_between(rho, rho_proj)
        x_proj = np.array([x_own[0], x_own[1], 0.0])
        if float(np.linalg.norm(x_proj)) == 0.0:
            horizontal = 0.0
        else:
            horizontal = _angle_between(x_proj, rho_proj)

    return GeometrySnapshot(
        los=rho,
        range_ft=rng,
        deviation_deg=math.degrees(deviation),
        aspect_deg=math.degrees(aspect),
        angle_off_deg=math.degrees(angle_off),
        horizontal_deg=math.degrees(horizontal),
        elevation_deg=math.degrees(elevation),
    )


def wez_contains(snapshot: GeometrySnapshot,
                 cone_deg: float = WEZ_CONE_DEG,
                 min_range_ft: float = WEZ_MIN_RANGE_FT,
                 max_range_ft: float = WEZ_MAX_RANGE_FT) -> bool:
    """True iff the opponent sits in the spherical-cone engagement zone.

    The opponent's zone uses the same rule with the roles swapped, i.e.
    ``wez_contains(angles(oppo, own))``.
    """
    return (snapshot.deviation_deg <= cone_deg
            and min_range_ft <= snapshot.range_ft <= max_range_ft)
