"""Self-demodulation, primary-field range law and parametric-array directivity.

Berktay's far-field result for an amplitude-modulated primary with envelope
``E(t)`` is::

    p_d(t) = beta p0^2 S0 / (16 pi rho0 c0^4 r alpha0) * d^2/dt^2 [E(t)^2]

The constant is applied to ``E**2`` exactly as given.  For the raw SQRAM
envelopes that means ``E**2 = 1 -/+ sin(wd t)`` and the output is
``+/- K wd^2 sin(wd t)``; feed unity-peak envelopes if the primary amplitude
convention requires it.

Directivity uses the absorption-limited (Westervelt) array pattern::

    D(theta) = [1 + (k_d sin^2(theta / 2) / alpha_T)^2] ** -0.5
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSolutionError, TooShortSignalError, UndersampledError
from .medium import MediumParams, absorption_np_per_m
from .waveform import Waveform

#: minimum samples per difference-frequency cycle for the derivative
MIN_SAMPLES_PER_DIFFERENCE_CYCLE = 20


@dataclass(frozen=True)
class BerktayParams:
    beta: float = 3.5
    primary_pressure_pa: float = 20e3
    beam_area_m2: float = 0.075 * 0.075
    density: float = 1000.0
    sound_speed: float = 1480.0
    range_m: float = 2.0
    alpha0_np_per_m: float = 0.02647

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")

    @property
    def scale(self) -> float:
        """The constant K multiplying d^2/dt^2 E^2, in Pa s^2."""
        return (self.beta * self.primary_pressure_pa ** 2 * self.beam_area_m2
                / (16.0 * math.pi * self.density * self.sound_speed ** 4
                   * self.range_m * self.alpha0_np_per_m))

    @classmethod
    def from_medium(cls, medium: MediumParams, primary_pressure_pa: float,
                    beam_area_m2: float, range_m: float,
                    alpha0_np_per_m: float) -> "BerktayParams":
        return cls(medium.beta, primary_pressure_pa, beam_area_m2, medium.density,
                   medium.sound_speed, range_m, alpha0_np_per_m)


_EDGE_STENCIL = np.array([15 / 4, -77 / 6, 107 / 6, -13.0, 61 / 12, -5 / 6])
_NEAR_EDGE_STENCIL = np.array([5 / 6, -5 / 4, -1 / 3, 7 / 6, -1 / 2, 1 / 12])


def second_derivative(y: np.ndarray, dt: float) -> np.ndarray:
    """d^2y/dt^2 by finite differences, fourth-order accurate everywhere.

    5-point central stencil in the interior; 6-point off-centre stencils on
    the first and last two samples.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 6:
        raise TooShortSignalError(f"need at least 6 samples, got {n}")
    d2 = np.empty(n)
    d2[2:-2] = (-y[4:] + 16.0 * y[3:-1] - 30.0 * y[2:-2] + 16.0 * y[1:-3] - y[:-4]) / 12.0
    d2[0] = _EDGE_STENCIL @ y[:6]
    d2[1] = _NEAR_EDGE_STENCIL @ y[:6]
    d2[-1] = _EDGE_STENCIL @ y[-1:-7:-1]
    d2[-2] = _NEAR_EDGE_STENCIL @ y[-1:-7:-1]
    return d2 / (dt * dt)


def berktay_demodulate(envelope: Waveform, params: BerktayParams,
                       difference_frequency_hz: float | None = None) -> Waveform:
    """Difference-frequency pressure radiated by a primary with this envelope.

    If ``difference_frequency_hz`` is given it is checked against the
    sampling (at least 20 samples per cycle).
    """
    if len(envelope) < 6:
        raise TooShortSignalError(f"need at least 6 envelope samples, got {len(envelope)}")
    if (difference_frequency_hz is not None and difference_frequency_hz
            > envelope.sample_rate_hz / MIN_SAMPLES_PER_DIFFERENCE_CYCLE):
        raise UndersampledError(
            f"envelope at {envelope.sample_rate_hz:g} Hz cannot resolve "
            f"{difference_frequency_hz:g} Hz")
    e2 = np.square(envelope.samples)
    pressure = params.scale * second_derivative(e2, envelope.dt)
    return envelope.replace(pressure, unit="pascal")


def spreading_gain(r: float, rayleigh_m: float) -> float:
    """Collimated (1) inside the Rayleigh distance, R_F / r beyond it."""
    return 1.0 if r <= rayleigh_m else rayleigh_m / r


def primary_at_range(source: Waveform, r: float, r_ref: float, f_avg_hz: float,
                     medium: MediumParams, rayleigh_m: float) -> Waveform:
    """Propagate a primary-field waveform from ``r_ref`` to ``r``.

    Amplitude follows the two-zone spreading law relative to ``r_ref`` times
    ``exp(-alpha_p (r - r_ref))``, with ``alpha_p`` the absorption at the
    mean primary frequency ``f_avg_hz``; the time base is delayed by
    ``(r - r_ref) / c0``.
    """
    if r <= 0 or r_ref <= 0:
        raise ValueError("ranges must be > 0")
    alpha = absorption_np_per_m(f_avg_hz, medium)
    gain = (spreading_gain(r, rayleigh_m) / spreading_gain(r_ref, rayleigh_m)
            * math.exp(-alpha * (r - r_ref)))
    return source.scaled(gain).delayed((r - r_ref) / medium.sound_speed)


def difference_wavenumber(f_d_hz: float, medium: MediumParams) -> float:
    return 2.0 * math.pi * f_d_hz / medium.sound_speed


def directivity(theta_deg, f_d_hz: float, alpha_total: float, medium: MediumParams):
    """Absorption-limited parametric-array pressure directivity, 1 on axis."""
    theta = np.radians(np.asarray(theta_deg, dtype=float))
    if np.any(np.abs(theta) >= np.pi / 2):
        raise ValueError("|theta| must be below 90 degrees")
    x = difference_wavenumber(f_d_hz, medium) * np.sin(theta / 2.0) ** 2 / alpha_total
    d = 1.0 / np.sqrt(1.0 + x * x)
    return float(d) if d.ndim == 0 else d


def halfpower_angle_deg(f_d_hz: float, alpha_total: float, medium: MediumParams) -> float:
    """Half-angle theta_h where the directivity falls to 1/sqrt(2)."""
    if f_d_hz <= 0 or alpha_total <= 0:
        raise ValueError("f_d_hz and alpha_total must be > 0")
    ratio = alpha_total / difference_wavenumber(f_d_hz, medium)
    if ratio > 1.0:
        raise NoSolutionError(
            f"alpha_T / k_d = {ratio:.3g} > 1: the beam has no half-power point")
    return math.degrees(2.0 * math.asin(math.sqrt(ratio)))


def halfpower_beamwidth_deg(f_d_hz: float, alpha_total_np_per_m: float,
                            medium: MediumParams) -> float:
    """Full -3 dB beamwidth in degrees."""
    return 2.0 * halfpower_angle_deg(f_d_hz, alpha_total_np_per_m, medium)
