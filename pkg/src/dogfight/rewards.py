"""The seven-term shaped reward for dogfight training.

Terms: energy-weighted pursuit score, horizontal-angle penalty, sparse
engagement-zone rewards for both aircraft, low-altitude penalty, AoA stall
penalty, and a specific-energy tracking term.  The total is the weighted sum
in fixed term order; a per-term breakdown is kept for logging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .units import ENERGY_REF_FT, ENERGY_TARGET_FT

PursuitScoreFn = Callable[[float, float], float]


def pursuit_score(deviation_deg: float, range_ft: float,
                  zero_crossing_deg: float = 30.0,
                  desired_range_ft: float = 1000.0,
                  range_width_ft: float = 1500.0) -> float:
    """Pursuit quality in [-1, 1].

    Peaks at (0 deg, 1000 ft); the angular factor changes sign at 30 deg
    deviation; a Gaussian factor decays with distance from the desired range.
    """
    angular = min(1.0, max(-1.0, 1.0 - deviation_deg / zero_crossing_deg))
    radial = math.exp(-(((range_ft - desired_range_ft) / range_width_ft) ** 2))
    return angular * radial


@dataclass(frozen=True)
class RewardConfig:
    """Weights and constants; everything is a plain config value."""

    weights: tuple = (1.0, 0.5, 10.0, 10.0, 2.0, 1.0, 0.2)
    z_min_ft: float = 250.0
    z_low_ft: float = 1000.0
    energy_ref_ft: float = ENERGY_REF_FT
    energy_target_ft: float = ENERGY_TARGET_FT
    aoa_low_deg: float = 0.0
    aoa_high_deg: float = 45.0
    pursuit_fn: PursuitScoreFn = pursuit_score


@dataclass
class RewardBreakdown:
    r1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0
    r4: float = 0.0
    r5: float = 0.0
    r6: float = 0.0
    r7: float = 0.0
    weights: tuple = ()
    total: float = 0.0

    def terms(self) -> tuple:
        return (self.r1, self.r2, self.r3, self.r4, self.r5, self.r6, self.r7)


def r1_energy_pursuit(f_p: float, e_bar: float) -> float:
    """Pursuit score scaled by the energy factor.

    The factor is (1.5 - Ebar) when the score is negative and (0.5 + Ebar)
    otherwise, with Ebar clamped to [0, 1.5] so it never flips the sign.
    """
    e_bar = min(1.5, max(0.0, e_bar))
    kappa = (1.5 - e_bar) if f_p < 0.0 else (0.5 + e_bar)
    return kappa * f_p


def r2_horizontal(horizontal_deg: float) -> float:
    return -horizontal_deg / 180.0


def r34_wez(own_hit: bool, oppo_hit: bool) -> tuple[float, float]:
    return (1.0 if own_hit else 0.0, -1.0 if oppo_hit else 0.0)


def r5_altitude(z_ft: float, v_z_norm: float, z_min_ft: float = 250.0,
                z_low_ft: float = 1000.0) -> float:
    """Cubic low-altitude penalty, scaled up by descent rate.

    ``v_z_norm`` is the normalized vertical velocity in [-1, 1].
    """
    v_z = min(1.0, max(-1.0, v_z_norm))
    depth = min(0.0, (z_ft - z_low_ft) / (z_low_ft - z_min_ft))
    return 0.5 * (1.0 + min(v_z, 0.0)) * depth ** 3


def r6_aoa(aoa_deg: float, low_deg: float = 0.0, high_deg: float = 45.0) -> float:
    if aoa_deg < low_deg:
        return -abs(aoa_deg - low_deg) / high_deg
    if aoa_deg >= high_deg:
        return -(aoa_deg - high_deg) / high_deg
    return 0.0


def r7_specific_energy(energy_ft: float, energy_target_ft: float) -> float:
    rel = (energy_ft - energy_target_ft) / energy_target_ft
    return min(1.0, max(-1.0, rel))


@dataclass(frozen=True)
class RewardInputs:
    deviation_deg: float
    range_ft: float
    horizontal_deg: float
    own_wez_hit: bool
    oppo_wez_hit: bool
    altitude_ft: float
    v_z_norm: float
    aoa_deg: float
    energy_ft: float


def total_reward(inputs: RewardInputs, cfg: RewardConfig = RewardConfig()) -> RewardBreakdown:
    """Evaluate all seven terms and combine them in fixed order."""
    f_p = cfg.pursuit_fn(inputs.deviation_deg, inputs.range_ft)
    e_bar = inputs.energy_ft / cfg.energy_ref_ft
    r1 = r1_energy_pursuit(f_p, e_bar)
    r2 = r2_horizontal(inputs.horizontal_deg)
    r3, r4 = r34_wez(inputs.own_wez_hit, inputs.oppo_wez_hit)
    r5 = r5_altitude(inputs.altitude_ft, inputs.v_z_norm, cfg.z_min_ft,
                     cfg.z_low_ft)
    r6 = r6_aoa(inputs.aoa_deg, cfg.aoa_low_deg, cfg.aoa_high_deg)
    r7 = r7_specific_energy(inputs.energy_ft, cfg.energy_target_ft)
    w = cfg.weights
    total = (w[0] * r1 + w[1] * r2 + w[2] * r3 + w[3] * r4 + w[4] * r5
             + w[5] * r6 + w[6] * r7)
    return RewardBreakdown(r1, r2, r3, r4, r5, r6, r7, weights=w, total=total)
