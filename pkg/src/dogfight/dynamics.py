"""Simplified fighter dynamics: 5-DOF pseudo-6-DOF point-mass model.

Controls drive first-order body-rate targets and thrust.  Attitude follows
rigid-body kinematics (direction-cosine integration, so flight through the
vertical is well defined); translation is a point mass under thrust,
AoA-dependent lift, quadratic drag, and gravity, integrated with
semi-implicit Euler.  Lift is applied perpendicular to the velocity vector,
so with zero thrust total specific energy can only be dissipated.

The lift curve is linear to 30 deg AoA, decays to 45 deg, and has a negative
slope past 45 deg (stall).  All coefficients live in ``AirframeCoefficients``
and are plain config values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError, SimulationFault
from .geometry import Pose, body_to_earth_matrix, wrap_pi
from .units import G_FTPS2, KT_TO_FTS

SEA_LEVEL_DENSITY = 0.0023769   # slug/ft^3
DENSITY_SCALE_HEIGHT_FT = 30000.0


@dataclass(frozen=True)
class ControlCommand:
    """Aileron, elevator, rudder, thrust — everything in [-1, 1].

    Thrust maps internally to a [0, 1] throttle.
    """

    aileron: float = 0.0
    elevator: float = 0.0
    rudder: float = 0.0
    thrust: float = 0.0

    def clamped(self) -> "ControlCommand":
        c = lambda v: min(1.0, max(-1.0, float(v)))
        return ControlCommand(c(self.aileron), c(self.elevator),
                              c(self.rudder), c(self.thrust))

    def throttle(self) -> float:
        return 0.5 * (min(1.0, max(-1.0, self.thrust)) + 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.aileron, self.elevator, self.rudder, self.thrust])

    @staticmethod
    def from_array(a) -> "ControlCommand":
        return ControlCommand(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


NEUTRAL_WARMUP_COMMAND = ControlCommand(0.0, 0.0, 0.0, 0.0)  # cruise throttle 0.5


@dataclass(frozen=True)
class AirframeCoefficients:
    """Every constant of the flight model; swap sets for unequal matchups."""

    mass_slug: float = 777.0                 # ~25000 lbf weight
    wing_area_ft2: float = 300.0
    lift_slope_per_rad: float = 3.5
    stall_start_deg: float = 30.0
    stall_end_deg: float = 45.0
    lift_at_stall_end: float = 1.1
    post_stall_slope_per_rad: float = 2.0
    min_lift_coeff: float = -0.4
    zero_lift_drag: float = 0.016
    induced_drag_k: float = 0.15
    stall_drag_per_45deg: float = 1.0
    max_thrust_lbf: float = 11800.0
    thrust_lapse_exp: float = 0.7
    roll_tau_s: float = 0.4
    pitch_tau_s: float = 0.7
    yaw_tau_s: float = 1.0
    max_roll_rate_dps: float = 180.0
    max_pitch_rate_dps: float = 30.0
    max_yaw_rate_dps: float = 20.0

    @staticmethod
    def standard() -> "AirframeCoefficients":
        return AirframeCoefficients()

    @staticmethod
    def aggressor() -> "AirframeCoefficients":
        """Superior-spec opponent: +15% thrust, +10% max rates."""
        base = AirframeCoefficients()
        return replace(base,
                       max_thrust_lbf=base.max_thrust_lbf * 1.15,
                       max_roll_rate_dps=base.max_roll_rate_dps * 1.10,
                       max_pitch_rate_dps=base.max_pitch_rate_dps * 1.10,
                       max_yaw_rate_dps=base.max_yaw_rate_dps * 1.10)


@dataclass
class AircraftState:
    """Simulator ground truth for one aircraft."""

    pose: Pose
    body_rates: np.ndarray          # (p, q, r) rad/s in body axes
    tas_fts: float                  # true airspeed
    accel_body: np.ndarray          # specific force (longitudinal, vertical) ft/s^2
    aoa_deg: float
    sideslip_deg: float
    life: int = 20

    def copy(self) -> "AircraftState":
        return AircraftState(
            pose=Pose(self.pose.position_e.copy(), self.pose.roll,
                      self.pose.pitch, self.pose.yaw,
                      self.pose.velocity_e.copy()),
            body_rates=self.body_rates.copy(),
            tas_fts=self.tas_fts,
            accel_body=self.accel_body.copy(),
            aoa_deg=self.aoa_deg,
            sideslip_deg=self.sideslip_deg,
            life=self.life,
        )

    def altitude_ft(self) -> float:
        return float(self.pose.position_e[2])

    def vertical_speed_fts(self) -> float:
        return float(self.pose.velocity_e[2])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.pose.position_e))
                    and np.all(np.isfinite(self.pose.velocity_e))
                    and np.all(np.isfinite(self.body_rates))
                    and np.isfinite(self.pose.roll)
                    and np.isfinite(self.pose.pitch)
                    and np.isfinite(self.pose.yaw))


def air_density(altitude_ft: float) -> float:
    z = max(0.0, altitude_ft)
    return SEA_LEVEL_DENSITY * math.exp(-z / DENSITY_SCALE_HEIGHT_FT)


def lift_coefficient(aoa_deg: float, af: AirframeCoefficients) -> float:
    a = abs(aoa_deg)
    sign = 1.0 if aoa_deg >= 0.0 else -1.0
    cl_stall_start = af.lift_slope_per_rad * math.radians(af.stall_start_deg)
    if a <= af.stall_start_deg:
        cl = af.lift_slope_per_rad * math.radians(a)
    elif a <= af.stall_end_deg:
        frac = (a - af.stall_start_deg) / (af.stall_end_deg - af.stall_start_deg)
        cl = cl_stall_start + (af.lift_at_stall_end - cl_stall_start) * frac
    else:
        cl = af.lift_at_stall_end - af.post_stall_slope_per_rad * math.radians(
            a - af.stall_end_deg)
        cl = max(cl, af.min_lift_coeff)
    return sign * cl


def drag_coefficient(aoa_deg: float, cl: float, af: AirframeCoefficients) -> float:
    cd = af.zero_lift_drag + af.induced_drag_k * cl * cl
    excess = abs(aoa_deg) - af.stall_end_deg
    if excess > 0.0:
        cd += af.stall_drag_per_45deg * excess / 45.0
    return cd


def _rodrigues(omega: np.ndarray, dt: float) -> np.ndarray:
    """Rotation matrix for a body-rate vector held constant over dt."""
    angle = float(np.linalg.norm(omega)) * dt
    if angle < 1e-12:
        return np.eye(3)
    axis = omega / np.linalg.norm(omega)
    k = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def _euler_from_ned(r_ned: np.ndarray) -> tuple[float, float, float]:
    pitch = -math.asin(min(1.0, max(-1.0, r_ned[2, 0])))
    roll = math.atan2(r_ned[2, 1], r_ned[2, 2])
    yaw = math.atan2(r_ned[1, 0], r_ned[0, 0])
    return roll, pitch, yaw


def _wind_angles(v_earth: np.ndarray, r_up: np.ndarray) -> tuple[float, float, float]:
    """(tas, aoa_deg, sideslip_deg) from earth-frame velocity and attitude."""
    tas = float(np.linalg.norm(v_earth))
    if tas < 1e-9:
        return 0.0, 0.0, 0.0
    v_body = r_up.T @ v_earth            # (fwd, right, belly) components
    u, v, w = v_body
    aoa = math.degrees(math.atan2(w, u))
    sideslip = math.degrees(math.asin(min(1.0, max(-1.0, v / tas))))
    return tas, aoa, sideslip


def step_dynamics(state: AircraftState, cmd: ControlCommand, dt: float,
                  af: AirframeCoefficients) -> AircraftState:
    """Advance one aircraft by dt seconds under a control command."""
    if dt <= 0.0:
        raise ContractError(f"step_dynamics: dt must be positive, got {dt}")
    if not state.is_finite():
        raise SimulationFault("step_dynamics: non-finite input state")
    cmd = cmd.clamped()

    # first-order body-rate response to the commanded rates
    targets = np.array([
        cmd.aileron * math.radians(af.max_roll_rate_dps),
        cmd.elevator * math.radians(af.max_pitch_rate_dps),
        cmd.rudder * math.radians(af.max_yaw_rate_dps),
    ])
    taus = np.array([af.roll_tau_s, af.pitch_tau_s, af.yaw_tau_s])
    decay = np.exp(-dt / taus)
    rates = targets + (state.body_rates - targets) * decay

    # attitude kinematics via the NED direction-cosine matrix
    r_up = body_to_earth_matrix(state.pose.roll, state.pose.pitch,
                                state.pose.yaw)
    r_ned = r_up.copy()
    r_ned[2, :] *= -1.0
    r_ned = r_ned @ _rodrigues(rates, dt)
    roll, pitch, yaw = _euler_from_ned(r_ned)
    r_up_new = body_to_earth_matrix(roll, pitch, yaw)

    # aerodynamic forces at the start-of-step velocity, new attitude
    v_e = state.pose.velocity_e
    tas, aoa_deg, _ = _wind_angles(v_e, r_up_new)
    z = float(state.pose.position_e[2])
    rho = air_density(z)
    q_dyn = 0.5 * rho * tas * tas
    cl = lift_coefficient(aoa_deg, af)
    cd = drag_coefficient(aoa_deg, cl, af)
    lift = q_dyn * af.wing_area_ft2 * cl
    drag = q_dyn * af.wing_area_ft2 * cd
    thrust = cmd.throttle() * af.max_thrust_lbf * (
        rho / SEA_LEVEL_DENSITY) ** af.thrust_lapse_exp

    body_x = r_up_new[:, 0]
    body_up = -r_up_new[:, 2]
    force = thrust * body_x
    if tas > 1e-6:
        v_hat = v_e / tas
        force = force - drag * v_hat
        lift_dir = body_up - float(np.dot(body_up, v_hat)) * v_hat
        norm = float(np.linalg.norm(lift_dir))
        if norm > 1e-9:
            force = force + lift * (lift_dir / norm)
    specific_force = force / af.mass_slug
    accel = specific_force + np.array([0.0, 0.0, -G_FTPS2])

    # semi-implicit Euler: velocity first, then position with new velocity
    v_new = v_e + accel * dt
    p_new = state.pose.position_e + v_new * dt

    tas_new, aoa_new, sideslip_new = _wind_angles(v_new, r_up_new)
    accel_body = np.array([float(np.dot(specific_force, body_x)),
                           float(np.dot(specific_force, body_up))])

    out = AircraftState(
        pose=Pose(p_new, wrap_pi(roll), pitch, wrap_pi(yaw), v_new),
        body_rates=rates,
        tas_fts=tas_new,
        accel_body=accel_body,
        aoa_deg=aoa_new,
        sideslip_deg=sideslip_new,
        life=state.life,
    )
    if not out.is_finite():
        raise SimulationFault("step_dynamics: integrator produced non-finite state")
    return out


# ---------------------------------------------------------------------------
# trim
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrimSolution:
    aoa_rad: float
    throttle: float

    @property
    def thrust_cmd(self) -> float:
        return 2.0 * self.throttle - 1.0


def trim_level_flight(tas_fts: float, altitude_ft: float,
                      af: AirframeCoefficients) -> TrimSolution:
    """Pitch/throttle pair for steady level flight at the given point.

    With level velocity and pitch equal to AoA, lift acts vertically and the
    balance is L(a) + D(a) tan(a) = W with T = D / cos(a).
    """
    rho = air_density(altitude_ft)
    q_dyn = 0.5 * rho * tas_fts * tas_fts
    s = af.wing_area_ft2
    weight = af.mass_slug * G_FTPS2

    def vertical_residual(aoa_rad: float) -> float:
        aoa_deg = math.degrees(aoa_rad)
        cl = lift_coefficient(aoa_deg, af)
        cd = drag_coefficient(aoa_deg, cl, af)
        return q_dyn * s * (cl + cd * math.tan(aoa_rad)) - weight

    lo, hi = math.radians(-5.0), math.radians(25.0)
    if vertical_residual(hi) < 0.0:
        raise ContractError(f"trim_level_flight: cannot lift weight at "
                            f"{tas_fts:.0f} ft/s, {altitude_ft:.0f} ft")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if vertical_residual(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    aoa = 0.5 * (lo + hi)
    aoa_deg = math.degrees(aoa)
    cl = lift_coefficient(aoa_deg, af)
    cd = drag_coefficient(aoa_deg, cl, af)
    thrust_needed = q_dyn * s * cd / math.cos(aoa)
    available = af.max_thrust_lbf * (rho / SEA_LEVEL_DENSITY) ** af.thrust_lapse_exp
    throttle = thrust_needed / available
    if not 0.0 <= throttle <= 1.0:
        raise ContractError(f"trim_level_flight: required throttle {throttle:.2f} "
                            f"outside [0, 1] at {tas_fts:.0f} ft/s")
    return TrimSolution(aoa_rad=aoa, throttle=throttle)


def make_level_state(position: np.ndarray, heading_rad: float, tas_fts: float,
                     af: AirframeCoefficients, trimmed: bool = True,
                     life: int = 20) -> AircraftState:
    """Aircraft in level flight along ``heading_rad``.

    ``trimmed`` pitches the nose to the trim AoA (steady flight); otherwise
    the attitude is exactly level, nose on the velocity vector.
    """
    velocity = tas_fts * np.array([math.cos(heading_rad),
                                   math.sin(heading_rad), 0.0])
    pitch = trim_level_flight(tas_fts, float(position[2]), af).aoa_rad if trimmed else 0.0
    pose = Pose(np.asarray(position, dtype=float), 0.0, pitch,
                wrap_pi(heading_rad), velocity)
    r_up = body_to_earth_matrix(pose.roll, pose.pitch, pose.yaw)
    tas, aoa, sideslip = _wind_angles(velocity, r_up)
    return AircraftState(pose=pose, body_rates=np.zeros(3), tas_fts=tas,
                         accel_body=np.array([0.0, G_FTPS2]), aoa_deg=aoa,
                         sideslip_deg=sideslip, life=life)


def euler_rates(state: AircraftState) -> np.ndarray:
    """Euler-angle rates from body rates (for the observation vector).

    The 1/cos(pitch) factor is clamped near the vertical; observations
    normalize rates anyway.
    """
    p, q, r = state.body_rates
    phi, theta = state.pose.roll, state.pose.pitch
    sphi, cphi = math.sin(phi), math.cos(phi)
    cth = max(0.05, abs(math.cos(theta)))
    tth = math.sin(theta) / cth
    phi_dot = p + tth * (q * sphi + r * cphi)
    theta_dot = q * cphi - r * sphi
    psi_dot = (q * sphi + r * cphi) / cth
    return np.array([phi_dot, theta_dot, psi_dot])
