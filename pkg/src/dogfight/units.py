"""Unit conversions and energy bookkeeping shared across modules."""

KT_TO_FTS = 1852.0 / 3600.0 / 0.3048   # 1.687810 ft/s per knot
FTS_TO_KT = 1.0 / KT_TO_FTS
G_FTPS2 = 32.174                        # gravitational acceleration, ft/s^2


def specific_energy(altitude_ft: float, tas_fts: float) -> float:
    """Energy height z + v^2/(2g), the currency of energy maneuvering."""
    return altitude_ft + tas_fts * tas_fts / (2.0 * G_FTPS2)


# Reference energies: the normalizer is the energy at 800 kt / 30000 ft, the
# target is 400 kt / 15000 ft.
ENERGY_REF_FT = specific_energy(30000.0, 800.0 * KT_TO_FTS)
ENERGY_TARGET_FT = specific_energy(15000.0, 400.0 * KT_TO_FTS)
