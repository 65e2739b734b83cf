"""Filter design/application and generic signal analysis.

Butterworth filters are realised as cascades of second-order sections
obtained by the bilinear transform with prewarping at the cutoff(s).  A
direct-form order-28 filter at these cutoff/sample-rate ratios would be
numerically useless, which is why everything here stays in SOS form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import signal as sps

from .errors import (SampleRateMismatchError, UnstableDesignError,
                     ZeroEnergyError)
from .waveform import Waveform

FilterKind = Literal["lowpass", "highpass", "bandpass"]
FilterMode = Literal["causal", "zero_phase"]

#: lowpass order used by the DFW post-processing chain
POSTPROCESS_LOWPASS_ORDER = 28
#: highpass order and cutoff removing the DC offset
POSTPROCESS_HIGHPASS_ORDER = 2
POSTPROCESS_HIGHPASS_HZ = 1e3


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind
    order: int
    cutoff_hz: float | tuple[float, float]

    def __post_init__(self):
        if self.kind not in ("lowpass", "highpass", "bandpass"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order!r}")
        if self.kind == "bandpass":
            lo, hi = self.cutoff_hz
            if not 0 < lo < hi:
                raise ValueError("bandpass cutoffs must satisfy 0 < low < high")
        elif np.ndim(self.cutoff_hz) != 0:
            raise ValueError(f"{self.kind} takes a single cutoff")

    def cutoffs(self) -> tuple[float, ...]:
        if self.kind == "bandpass":
            return tuple(float(c) for c in self.cutoff_hz)
        return (float(self.cutoff_hz),)


@dataclass(frozen=True, eq=False)
class FilterChain:
    """Cascade of normalised biquads plus one overall gain.

    ``sections`` has one row ``[b0, b1, b2, 1, a1, a2]`` per section with the
    numerator scaled so its leading nonzero coefficient is 1.  First-order
    sections carry zeros in ``b2`` and ``a2``.
    """

    sections: np.ndarray
    gain: float
    sample_rate_hz: float

    def __post_init__(self):
        sos = np.array(self.sections, dtype=float).reshape(-1, 6)
        sos.setflags(write=False)
        object.__setattr__(self, "sections", sos)

    @classmethod
    def identity(cls, sample_rate_hz: float) -> "FilterChain":
        return cls(np.zeros((0, 6)), 1.0, sample_rate_hz)

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    def then(self, other: "FilterChain") -> "FilterChain":
        """Chain that applies ``self`` and then ``other``."""
        if other.sample_rate_hz != self.sample_rate_hz:
            raise SampleRateMismatchError("cannot cascade chains designed at different rates")
        return FilterChain(np.vstack([self.sections, other.sections]),
                           self.gain * other.gain, self.sample_rate_hz)

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(row[3:]) if row[5] else np.roots(row[3:5])
                               for row in self.sections]) if self.n_sections else np.zeros(0)

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def runtime_sos(self) -> np.ndarray:
        """Sections with the gain spread evenly, ready for ``sosfilt``."""
        if self.n_sections == 0:
            return np.array([[self.gain, 0, 0, 1, 0, 0]], dtype=float)
        sos = self.sections.copy()
        share = abs(self.gain) ** (1.0 / self.n_sections)
        sos[:, :3] *= share
        if self.gain < 0:
            sos[0, :3] *= -1
        return sos

    def response(self, frequencies_hz) -> np.ndarray:
        """Complex frequency response at the given frequencies."""
        _, h = sps.sosfreqz(self.runtime_sos(), worN=np.atleast_1d(frequencies_hz),
                            fs=self.sample_rate_hz)
        return h

    def magnitude_db(self, frequencies_hz) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.response(frequencies_hz)))


def _section_pole_radius(row: np.ndarray) -> float:
    den = row[3:] if row[5] else row[3:5]
    return float(np.max(np.abs(np.roots(den))))


def _normalise_sections(sos: np.ndarray) -> tuple[np.ndarray, float]:
    sos = np.array(sos, dtype=float)
    gain = 1.0
    for row in sos:
        row[:3] /= row[3]
        row[3:] /= row[3]
        nonzero = np.flatnonzero(row[:3])
        if nonzero.size == 0:
            raise UnstableDesignError("a section numerator underflowed to zero")
        lead = row[nonzero[0]]
        row[:3] /= lead
        gain *= lead
    # ascending Q: poles nearest the unit circle go last
    order = np.argsort([_section_pole_radius(r) for r in sos], kind="stable")
    return sos[order], gain


def design_butterworth(spec: FilterSpec, sample_rate_hz: float) -> FilterChain:
    """Digital Butterworth filter as a :class:`FilterChain`.

    Raises :class:`UnstableDesignError` if any resulting section has a pole
    on or outside the unit circle.
    """
    nyquist = sample_rate_hz / 2.0
    for cutoff in spec.cutoffs():
        if not 0 < cutoff < nyquist:
            raise ValueError(
                f"cutoff {cutoff:g} Hz must lie strictly between 0 and Nyquist {nyquist:g} Hz")
    wn = spec.cutoffs() if spec.kind == "bandpass" else spec.cutoffs()[0]
    try:
        with np.errstate(all="ignore"):
            sos = sps.butter(int(spec.order), wn, btype=spec.kind, fs=sample_rate_hz,
                             output="sos")
    except (OverflowError, FloatingPointError) as exc:
        raise UnstableDesignError(f"{spec.kind} order {spec.order}: {exc}") from None
    if not np.all(np.isfinite(sos)):
        raise UnstableDesignError(f"{spec.kind} order {spec.order}: non-finite coefficients")
    sections, gain = _normalise_sections(sos)
    chain = FilterChain(sections, gain, sample_rate_hz)
    if gain == 0.0 or not math.isfinite(gain) or not chain.is_stable():
        raise UnstableDesignError(
            f"{spec.kind} order {spec.order} at {spec.cutoffs()} Hz is unstable at "
            f"fs = {sample_rate_hz:g} Hz")
    return chain


def analog_butterworth_db(spec: FilterSpec, frequencies_hz, sample_rate_hz: float) -> np.ndarray:
    """Magnitude in dB of the prewarped analog prototype mapped by the bilinear transform.

    Evaluated in closed form, independent of the SOS design path.
    """
    f = np.asarray(frequencies_hz, dtype=float)
    warp = lambda x: np.tan(np.pi * np.asarray(x, dtype=float) / sample_rate_hz)
    w = warp(f)
    n = spec.order
    if spec.kind == "lowpass":
        ratio = w / warp(spec.cutoff_hz)
    elif spec.kind == "highpass":
        with np.errstate(divide="ignore"):
            ratio = warp(spec.cutoff_hz) / w
    else:
        lo, hi = warp(spec.cutoff_hz[0]), warp(spec.cutoff_hz[1])
        with np.errstate(divide="ignore"):
            ratio = (w * w - lo * hi) / (w * (hi - lo))
    with np.errstate(over="ignore"):
        return -10.0 * np.log10(1.0 + np.abs(ratio) ** (2 * n))


def apply_filter(chain: FilterChain, x: Waveform, mode: FilterMode = "causal") -> Waveform:
    """Run ``x`` through ``chain``.

    ``causal`` filters forward once.  ``zero_phase`` filters forward, then
    again over the time-reversed result (no padding), giving the squared
    magnitude with zero phase.  Output length equals input length.
    """
    if chain.sample_rate_hz != x.sample_rate_hz:
        raise SampleRateMismatchError(
            f"chain designed at {chain.sample_rate_hz:g} Hz, waveform sampled at "
            f"{x.sample_rate_hz:g} Hz")
    sos = chain.runtime_sos()
    y = sps.sosfilt(sos, x.samples)
    if mode == "zero_phase":
        y = sps.sosfilt(sos, y[::-1])[::-1]
    elif mode != "causal":
        raise ValueError(f"unknown filter mode {mode!r}")
    return x.replace(np.ascontiguousarray(y))


def postprocess_chain(f_d_hz: float, sample_rate_hz: float) -> FilterChain:
    """Order-28 lowpass at twice the difference frequency, then a 2nd-order 1 kHz highpass."""
    if not 2.0 * f_d_hz < sample_rate_hz / 2.0:
        raise ValueError("twice the difference frequency must be below Nyquist")
    lowpass = design_butterworth(
        FilterSpec("lowpass", POSTPROCESS_LOWPASS_ORDER, 2.0 * f_d_hz), sample_rate_hz)
    highpass = design_butterworth(
        FilterSpec("highpass", POSTPROCESS_HIGHPASS_ORDER, POSTPROCESS_HIGHPASS_HZ),
        sample_rate_hz)
    return lowpass.then(highpass)


def spectrum(x: Waveform) -> tuple[np.ndarray, np.ndarray]:
    """Single-sided DFT magnitude.

    Normalised so ``sum(x**2) == sum(magnitude**2)`` (Parseval); bin spacing
    is ``fs / N``.
    """
    n = len(x)
    if n == 0:
        raise ValueError("empty waveform")
    coeffs = np.fft.rfft(x.samples)
    mag = np.abs(coeffs) / np.sqrt(n)
    last = mag.size if n % 2 else mag.size - 1
    mag[1:last] *= np.sqrt(2.0)
    freqs = np.fft.rfftfreq(n, d=1.0 / x.sample_rate_hz)
    return freqs, mag


@dataclass(frozen=True)
class Correlation:
    delays_s: np.ndarray
    values: np.ndarray
    peak_value: float
    peak_delay_s: float


def normalized_xcorr(a: Waveform, b: Waveform) -> Correlation:
    """Energy-normalised cross-correlation of ``b`` against ``a``.

    ``values[k]`` is ``sum(a[n] * b[n + lag_k]) / sqrt(Ea * Eb)``, and the
    delay of lag k is the time shift that moves ``a`` onto ``b`` (so if b is
    a delayed by d, the peak sits at +d).  The reported peak is the value of
    largest magnitude, sign included.
    """
    if a.sample_rate_hz != b.sample_rate_hz:
        raise SampleRateMismatchError("correlation inputs must share a sample rate")
    if len(a) == 0 or len(b) == 0:
        raise ValueError("correlation inputs must be non-empty")
    energy = float(np.dot(a.samples, a.samples)) * float(np.dot(b.samples, b.samples))
    if energy == 0.0:
        raise ZeroEnergyError("cannot normalise correlation of a zero-energy signal")
    values = sps.correlate(b.samples, a.samples, mode="full") / np.sqrt(energy)
    lags = sps.correlation_lags(len(b), len(a), mode="full")
    delays = lags / a.sample_rate_hz + (b.start_time_s - a.start_time_s)
    k = int(np.argmax(np.abs(values)))
    return Correlation(delays, values, float(values[k]), float(delays[k]))


def rms(x: Waveform, window: Sequence[float] | None = None) -> float:
    """Root-mean-square value, over ``[t0, t1)`` if a window is given."""
    if window is not None:
        t0, t1 = window
        if t0 < x.start_time_s - 0.5 * x.dt or t1 > x.end_time_s + 0.5 * x.dt:
            raise ValueError("rms window extends beyond the waveform")
        x = x.window(t0, t1)
    if len(x) == 0:
        raise ValueError("rms over an empty window")
    return float(np.sqrt(np.mean(np.square(x.samples))))
