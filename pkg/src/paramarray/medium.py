"""Water-medium physics: absorption and the parametric-array critical distances.

Absorption follows the classic two-term (boric acid relaxation + freshwater
viscous) formula in dB per kiloyard, with frequencies in kHz::

    alpha = 1.86e-2 * S * fT * f**2 / (fT**2 + f**2) + 2.68e-2 * f**2 / fT
    fT    = 21.9 * 10**(6 - 1520 / (T + 273))

Everything else here is closed-form:

* absorption range  R_a = 1 / alpha_p          (alpha_p in Np/m)
* Rayleigh distance R_F = S / lambda_p = S f / c0
* shock distance    R_s = c0 lambda_p / (4 beta u),  u = p0 / (rho0 c0)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidMediumError

#: metres per kiloyard
METRES_PER_KYD = 914.4
#: decibels per neper, 20 / ln(10)
DB_PER_NEPER = 20.0 / math.log(10.0)


@dataclass(frozen=True)
class MediumParams:
    """Water properties.

    The defaults describe the freshwater test tank: 10 degC, no salinity,
    rho0 = 1000 kg/m^3, c0 = 1480 m/s and beta = 3.5.
    """

    temperature_c: float = 10.0
    salinity_ppt: float = 0.0
    density: float = 1000.0
    sound_speed: float = 1480.0
    beta: float = 3.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("density", "sound_speed", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidMediumError(f"{name} must be > 0, got {value!r}")
        if not (0.0 <= self.salinity_ppt <= 45.0):
            raise InvalidMediumError(
                f"salinity_ppt must be within [0, 45], got {self.salinity_ppt!r}")
        if not (-2.0 <= self.temperature_c <= 40.0):
            raise InvalidMediumError(
                f"temperature_c must be within [-2, 40], got {self.temperature_c!r}")


def relaxation_frequency_khz(temperature_c: float) -> float:
    """Boric-acid relaxation frequency fT in kHz."""
    return 21.9 * 10.0 ** (6.0 - 1520.0 / (temperature_c + 273.0))


def absorption_db_per_kyd(frequency_khz: float, medium: MediumParams) -> float:
    """Absorption coefficient in dB/kyd at ``frequency_khz`` (kHz)."""
    medium.validate()
    if frequency_khz < 0:
        raise ValueError(f"frequency_khz must be >= 0, got {frequency_khz!r}")
    f2 = frequency_khz * frequency_khz
    f_t = relaxation_frequency_khz(medium.temperature_c)
    boric = 1.86e-2 * medium.salinity_ppt * f_t * f2 / (f_t * f_t + f2)
    viscous = 2.68e-2 * f2 / f_t
    return boric + viscous


def absorption_np_per_m(frequency_hz: float, medium: MediumParams) -> float:
    """Absorption coefficient in nepers per metre at ``frequency_hz``."""
    db_per_kyd = absorption_db_per_kyd(frequency_hz / 1e3, medium)
    return db_per_kyd / METRES_PER_KYD / DB_PER_NEPER


def absorption_range(frequency_hz: float, medium: MediumParams) -> float:
    """Absorption range R_a in metres.

    Returns ``math.inf`` when the absorption evaluates to zero, which means
    the array is not absorption limited at all.
    """
    if frequency_hz <= 0:
        raise ValueError(f"frequency_hz must be > 0, got {frequency_hz!r}")
    alpha = absorption_np_per_m(frequency_hz, medium)
    if alpha == 0.0:
        return math.inf
    return 1.0 / alpha


def rayleigh_distance(aperture_area: float, frequency_hz: float,
                      medium: MediumParams) -> float:
    """Rayleigh distance R_F = S / lambda in metres."""
    if aperture_area <= 0:
        raise ValueError(f"aperture_area must be > 0, got {aperture_area!r}")
    if frequency_hz <= 0:
        raise ValueError(f"frequency_hz must be > 0, got {frequency_hz!r}")
    return aperture_area * frequency_hz / medium.sound_speed


def particle_velocity(primary_pressure: float, medium: MediumParams) -> float:
    """Plane-wave particle velocity amplitude u = p0 / (rho0 c0)."""
    return primary_pressure / (medium.density * medium.sound_speed)


def shock_distance(primary_pressure: float, frequency_hz: float,
                   medium: MediumParams) -> float:
    """Plane-wave shock formation distance R_s in metres."""
    if primary_pressure <= 0:
        raise ValueError(f"primary_pressure must be > 0, got {primary_pressure!r}")
    if frequency_hz <= 0:
        raise ValueError(f"frequency_hz must be > 0, got {frequency_hz!r}")
    wavelength = medium.sound_speed / frequency_hz
    u = particle_velocity(primary_pressure, medium)
    return medium.sound_speed * wavelength / (4.0 * medium.beta * u)
