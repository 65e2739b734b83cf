"""Phenomenological transmit transducer.

The tuned transducer is reduced to a single resonator: a second-order
band-pass whose -3 dB edges sit at ``center +/- bandwidth / 2``, followed by
a scalar gain.  That captures the two things observable in the primary-field
recordings, namely the reduced first-cycle amplitude of short, wideband
symbols and the low-level ring-down after the gate closes.

Gain calibration: the resonator is normalised to unit magnitude at the
centre frequency, then a scalar is chosen so that a long reference SQRAM
burst (8 cycles at ``calibration_fd_hz``, amplitude ``reference_drive_v``)
produces a peak output pressure of exactly ``primary_pressure_pa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dsp import FilterChain, FilterSpec, apply_filter, design_butterworth
from .errors import InvalidSourceError, UndersampledError
from .waveform import MIN_SAMPLES_PER_CARRIER, SymbolSpec, Waveform, synth_symbol

CALIBRATION_CYCLES = 8


@dataclass(frozen=True)
class SourceParams:
    aperture_width_m: float = 0.075
    aperture_height_m: float = 0.075
    center_frequency_hz: float = 855e3
    clamp_capacitance_f: float = 17e-9
    tuning_inductance_h: float = 2.1e-6
    model_bandwidth_hz: float = 100e3
    primary_pressure_pa: float = 20e3
    reference_drive_v: float = 1.0
    calibration_fd_hz: float = 20e3

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidSourceError(f"{name} must be > 0, got {value!r}")
        if self.model_bandwidth_hz >= 2.0 * self.center_frequency_hz:
            raise InvalidSourceError("model_bandwidth_hz must be below twice the centre frequency")
        if self.calibration_fd_hz >= self.center_frequency_hz:
            raise InvalidSourceError("calibration_fd_hz must be below the centre frequency")

    @property
    def aperture_area_m2(self) -> float:
        return self.aperture_width_m * self.aperture_height_m


def tuned_resonance_hz(inductance_h: float, capacitance_f: float) -> float:
    """Series-LC resonance ``1 / (2 pi sqrt(L C))``."""
    if inductance_h <= 0 or capacitance_f <= 0:
        raise ValueError("inductance and capacitance must be > 0")
    return 1.0 / (2.0 * math.pi * math.sqrt(inductance_h * capacitance_f))


def resonator_chain(params: SourceParams, sample_rate_hz: float) -> FilterChain:
    """Band-pass resonator normalised to 0 dB at the centre frequency."""
    f0, half = params.center_frequency_hz, params.model_bandwidth_hz / 2.0
    chain = design_butterworth(FilterSpec("bandpass", 1, (f0 - half, f0 + half)), sample_rate_hz)
    g0 = abs(chain.response(f0)[0])
    return FilterChain(chain.sections, chain.gain / g0, sample_rate_hz)


@lru_cache(maxsize=64)
def calibration_gain(params: SourceParams, sample_rate_hz: float) -> float:
    """Pascals per volt applied after the resonator."""
    spec = SymbolSpec(params.calibration_fd_hz, CALIBRATION_CYCLES, 1)
    burst = synth_symbol(spec, params.center_frequency_hz, sample_rate_hz,
                         params.reference_drive_v)
    response = apply_filter(resonator_chain(params, sample_rate_hz), burst)
    return params.primary_pressure_pa / float(np.max(np.abs(response.samples)))


def drive_to_pressure(drive: Waveform, params: SourceParams) -> Waveform:
    """Source pressure produced by a drive voltage waveform.

    The output keeps the drive's time base and length; ring-down that falls
    past the last drive sample is lost, so pad the drive if the tail matters.
    """
    fs = drive.sample_rate_hz
    if fs < MIN_SAMPLES_PER_CARRIER * params.center_frequency_hz:
        raise UndersampledError(
            f"drive sampled at {fs:g} Hz, need >= {MIN_SAMPLES_PER_CARRIER} x "
            f"{params.center_frequency_hz:g} Hz")
    filtered = apply_filter(resonator_chain(params, fs), drive)
    return filtered.scaled(calibration_gain(params, fs), unit="pascal")
