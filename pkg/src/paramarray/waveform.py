"""Sampled waveforms and square-root amplitude-modulated (SQRAM) symbols.

A "+1" symbol uses the envelope ``sqrt(1 - sin(wd t))`` and a "-1" symbol
``sqrt(1 + sin(wd t))``.  Both are multiplied by ``sin(wc t)`` and gated to
``0 <= t < n_cycles / fd``.  The squared envelopes differ only in the sign of
the sinusoid, so the self-demodulated pressures come out 180 degrees apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySequenceError, UndersampledError

UNITS = ("volt", "pascal", "dimensionless")

#: default simulation sample rate
DEFAULT_SAMPLE_RATE_HZ = 20e6
#: minimum samples per carrier cycle accepted by the synthesisers
MIN_SAMPLES_PER_CARRIER = 8


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled real signal.

    ``start_time_s`` is the time of the first sample; t = 0 is the transmit
    trigger.
    """

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0
    unit: str = "dimensionless"

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz!r}")
        if self.unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def end_time_s(self) -> float:
        """Time just past the last sample."""
        return self.start_time_s + self.duration_s

    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.samples.size) / self.sample_rate_hz

    def replace(self, samples=None, **changes) -> "Waveform":
        values = dict(samples=self.samples if samples is None else samples,
                      sample_rate_hz=self.sample_rate_hz,
                      start_time_s=self.start_time_s, unit=self.unit)
        values.update(changes)
        return Waveform(**values)

    def scaled(self, factor: float, unit: str | None = None) -> "Waveform":
        return self.replace(self.samples * factor, unit=unit or self.unit)

    def delayed(self, delay_s: float) -> "Waveform":
        """Same samples, time base shifted later by ``delay_s``."""
        return self.replace(start_time_s=self.start_time_s + delay_s)

    def padded(self, before_s: float = 0.0, after_s: float = 0.0) -> "Waveform":
        """Zero-pad on either side, keeping sample times aligned."""
        n_before = int(round(before_s * self.sample_rate_hz))
        n_after = int(round(after_s * self.sample_rate_hz))
        samples = np.concatenate([np.zeros(n_before), self.samples, np.zeros(n_after)])
        return self.replace(samples, start_time_s=self.start_time_s - n_before / self.sample_rate_hz)

    def index_of(self, t: float) -> int:
        """Index of the first sample at or after time ``t``."""
        return int(math.ceil((t - self.start_time_s) * self.sample_rate_hz - 1e-9))

    def window(self, t0: float, t1: float) -> "Waveform":
        """Samples with ``t0 <= t < t1``."""
        i0 = max(self.index_of(t0), 0)
        i1 = min(self.index_of(t1), self.samples.size)
        i1 = max(i1, i0)
        return self.replace(self.samples[i0:i1],
                            start_time_s=self.start_time_s + i0 / self.sample_rate_hz)


@dataclass(frozen=True)
class SymbolSpec:
    """One SQRAM symbol: difference frequency, length in cycles, polarity."""

    difference_frequency_hz: float
    n_cycles: float = 2.0
    polarity: int = 1

    def __post_init__(self):
        if not self.difference_frequency_hz > 0:
            raise ValueError("difference_frequency_hz must be > 0")
        twice = 2.0 * self.n_cycles
        if twice < 1 or abs(twice - round(twice)) > 1e-9:
            raise ValueError(
                f"n_cycles must be a positive multiple of 0.5, got {self.n_cycles!r}")
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity!r}")

    @property
    def duration_s(self) -> float:
        """Gate length t_d."""
        return self.n_cycles / self.difference_frequency_hz

    def with_polarity(self, polarity: int) -> "SymbolSpec":
        return SymbolSpec(self.difference_frequency_hz, self.n_cycles, polarity)


def envelope_value(t, f_d: float, polarity: int = 1):
    """SQRAM envelope at time(s) ``t``; values lie in [0, sqrt(2)].

    ``polarity=+1`` gives ``sqrt(1 - sin(wd t))``, ``-1`` gives
    ``sqrt(1 + sin(wd t))``.
    """
    if f_d <= 0:
        raise ValueError("f_d must be > 0")
    if polarity not in (1, -1):
        raise ValueError("polarity must be +1 or -1")
    s = np.sin(2.0 * np.pi * f_d * np.asarray(t, dtype=float))
    # clip guards the -1e-17 that 1 - sin can produce at the envelope nulls
    return np.sqrt(np.clip(1.0 - polarity * s, 0.0, None))


def squared_envelope(t, f_d: float, polarity: int = 1):
    """``E(t)**2 = 1 -/+ sin(wd t)`` evaluated without the square root."""
    return 1.0 - polarity * np.sin(2.0 * np.pi * f_d * np.asarray(t, dtype=float))


def _check_carrier(carrier_hz: float, sample_rate_hz: float, f_d: float) -> None:
    if sample_rate_hz < MIN_SAMPLES_PER_CARRIER * carrier_hz:
        raise UndersampledError(
            f"sample rate {sample_rate_hz:g} Hz is below {MIN_SAMPLES_PER_CARRIER} x "
            f"carrier {carrier_hz:g} Hz")
    if carrier_hz <= f_d:
        raise ValueError(f"carrier {carrier_hz:g} Hz must exceed difference frequency {f_d:g} Hz")


def gate_samples(spec: SymbolSpec, sample_rate_hz: float) -> int:
    return int(round(spec.duration_s * sample_rate_hz))


def synth_symbol(spec: SymbolSpec, carrier_hz: float = 855e3,
                 sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                 amplitude: float = 1.0, pad_before_s: float = 0.0,
                 pad_after_s: float = 0.0) -> Waveform:
    """Drive voltage ``amplitude * E(t) * sin(wc t)`` over the symbol gate.

    The gate holds ``round(t_d * fs)`` samples starting at t = 0; optional
    zero padding is added outside it.
    """
    _check_carrier(carrier_hz, sample_rate_hz, spec.difference_frequency_hz)
    t = np.arange(gate_samples(spec, sample_rate_hz)) / sample_rate_hz
    env = envelope_value(t, spec.difference_frequency_hz, spec.polarity)
    samples = amplitude * env * np.sin(2.0 * np.pi * carrier_hz * t)
    wave = Waveform(samples, sample_rate_hz, 0.0, "volt")
    if pad_before_s or pad_after_s:
        wave = wave.padded(pad_before_s, pad_after_s)
    return wave


def synth_sequence(bits: Sequence[int], spec_template: SymbolSpec,
                   carrier_hz: float = 855e3, guard_s: float | None = None,
                   sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
                   amplitude: float = 1.0) -> Waveform:
    """Concatenate one SQRAM symbol per bit, separated by ``guard_s`` of silence.

    ``guard_s`` defaults to one symbol duration.  Each symbol restarts its
    own envelope and carrier phase at its gate start.
    """
    bits = list(bits)
    if not bits:
        raise EmptySequenceError("bit sequence is empty")
    if guard_s is None:
        guard_s = spec_template.duration_s
    if guard_s < 0:
        raise ValueError("guard_s must be >= 0")
    guard = np.zeros(int(round(guard_s * sample_rate_hz)))
    pieces = []
    for i, bit in enumerate(bits):
        if bit not in (1, -1):
            raise ValueError(f"bits must be +1/-1, got {bit!r} at position {i}")
        if i:
            pieces.append(guard)
        symbol = synth_symbol(spec_template.with_polarity(bit), carrier_hz,
                              sample_rate_hz, amplitude)
        pieces.append(symbol.samples)
    return Waveform(np.concatenate(pieces), sample_rate_hz, 0.0, "volt")


def symbol_period_s(spec: SymbolSpec, guard_s: float, sample_rate_hz: float) -> float:
    """Slot length of :func:`synth_sequence` output, rounded to whole samples."""
    n = gate_samples(spec, sample_rate_hz) + int(round(guard_s * sample_rate_hz))
    return n / sample_rate_hz
