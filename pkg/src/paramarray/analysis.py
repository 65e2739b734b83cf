"""Measurement procedures applied to simulated or imported pressure records.

Covers reference-pulse construction, correlation-based pulse quality,
phase comparison of "+1"/"-1" pulses, beamwidth extraction from a
cross-range scan, source level and symbol decoding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .dsp import FilterChain, FilterMode, apply_filter, normalized_xcorr, rms
from .errors import (InsufficientSignalError, NoCrossingError,
                     SampleRateMismatchError, SlotMisalignmentError)
from .waveform import SymbolSpec, Waveform, envelope_value, gate_samples

#: 20 log10(1 / sqrt(2))
HALF_POWER_DB = -10.0 * math.log10(2.0)
#: reference pressure for source levels
MICROPASCAL = 1e-6


@dataclass(frozen=True, eq=False)
class ScanData:
    """Received waveforms at a set of cross-range offsets, all at one range."""

    range_m: float
    positions_m: np.ndarray
    waveforms: tuple[Waveform, ...]

    def __post_init__(self):
        positions = np.array(self.positions_m, dtype=float)
        object.__setattr__(self, "positions_m", positions)
        object.__setattr__(self, "waveforms", tuple(self.waveforms))
        if self.range_m <= 0:
            raise ValueError("range_m must be > 0")
        if positions.ndim != 1 or positions.size < 3:
            raise ValueError("a scan needs at least 3 positions")
        if len(self.waveforms) != positions.size:
            raise ValueError("one waveform per position is required")
        if np.any(np.diff(positions) <= 0):
            raise ValueError("positions must be strictly increasing")
        if len({w.sample_rate_hz for w in self.waveforms}) != 1:
            raise SampleRateMismatchError("scan waveforms must share a sample rate")

    @property
    def angles_deg(self) -> np.ndarray:
        return np.degrees(np.arctan2(self.positions_m, self.range_m))


@dataclass(frozen=True)
class PulseQuality:
    peak_correlation: float
    arrival_time_s: float


def make_reference(f_d_hz: float, n_cycles: float, sample_rate_hz: float,
                   chain: FilterChain, mode: FilterMode = "causal",
                   tail_s: float | None = None) -> Waveform:
    """Unit sinusoid of ``n_cycles`` at ``f_d_hz`` starting at t = 0, run through ``chain``.

    ``tail_s`` of silence (default: four difference periods) follows the
    gate so the filter transient is kept.
    """
    spec = SymbolSpec(f_d_hz, n_cycles)
    if tail_s is None:
        tail_s = 4.0 / f_d_hz
    t = np.arange(gate_samples(spec, sample_rate_hz)) / sample_rate_hz
    gated = Waveform(np.sin(2.0 * np.pi * f_d_hz * t), sample_rate_hz, 0.0, "dimensionless")
    gated = gated.padded(0.0, tail_s)
    if chain.n_sections == 0 and chain.gain == 1.0:
        return gated
    return apply_filter(chain, gated, mode)


def pulse_quality(measured: Waveform, reference: Waveform) -> PulseQuality:
    """Peak normalised correlation of ``measured`` against ``reference``.

    The peak is the largest positive correlation value (matched detection
    of a same-polarity pulse).  Its delay is the shift of the reference's
    time origin, i.e. the arrival time of the pulse on ``measured``'s clock.
    """
    corr = normalized_xcorr(reference, measured)
    k = int(np.argmax(corr.values))
    return PulseQuality(float(corr.values[k]), float(corr.delays_s[k]))


def active_interval(x: Waveform, threshold: float = 0.1) -> tuple[float, float]:
    """Time span where ``|x|`` exceeds ``threshold`` times its peak."""
    mag = np.abs(x.samples)
    peak = mag.max() if mag.size else 0.0
    if peak == 0.0:
        raise InsufficientSignalError("signal is identically zero")
    idx = np.flatnonzero(mag >= threshold * peak)
    t = x.times()
    return float(t[idx[0]]), float(t[idx[-1]] + x.dt)


def _projection(x: Waveform, f_hz: float, t0: float, t1: float) -> complex:
    seg = x.window(t0, t1)
    return complex(np.sum(seg.samples * np.exp(-2j * np.pi * f_hz * seg.times())))


def phase_difference_deg(p_plus: Waveform, p_minus: Waveform, f_d_hz: float,
                         gate: Sequence[float] | None = None) -> float:
    """Phase of the ``f_d`` component of ``p_minus`` relative to ``p_plus``, in [0, 360).

    Both records are projected onto ``exp(-j 2 pi f_d t)`` on their absolute
    time axes over the same interval.  Without an explicit ``gate`` the
    interval is the active span of ``p_plus`` minus one difference period at
    each edge (falling back to the whole span for pulses shorter than three
    periods), trimmed to a whole number of periods.
    """
    if p_plus.sample_rate_hz != p_minus.sample_rate_hz:
        raise SampleRateMismatchError("phase comparison needs equal sample rates")
    period = 1.0 / f_d_hz
    if gate is None:
        t0, t1 = active_interval(p_plus)
        if t1 - t0 >= 3.0 * period:
            t0, t1 = t0 + period, t1 - period
    else:
        t0, t1 = gate
    n_periods = math.floor((t1 - t0) / period + 1e-9)
    if n_periods < 1:
        raise InsufficientSignalError(
            f"interval of {t1 - t0:.3g} s holds less than one {f_d_hz:g} Hz cycle")
    t1 = t0 + n_periods * period
    x_plus = _projection(p_plus, f_d_hz, t0, t1)
    x_minus = _projection(p_minus, f_d_hz, t0, t1)
    if x_plus == 0 or x_minus == 0:
        raise InsufficientSignalError(f"no energy at {f_d_hz:g} Hz in the comparison interval")
    deg = math.degrees(np.angle(x_minus / x_plus)) % 360.0
    return 0.0 if deg > 360.0 - 1e-9 else deg


def measure_frequency_hz(x: Waveform, f_guess_hz: float,
                         interval: Sequence[float] | None = None) -> float:
    """Frequency of the dominant tone near ``f_guess_hz`` (Hann-windowed DTFT peak)."""
    t0, t1 = interval if interval is not None else (x.start_time_s, x.end_time_s)
    seg = x.window(t0, t1)
    if len(seg) < 8:
        raise InsufficientSignalError("too few samples to estimate frequency")
    t = seg.times()
    weighted = seg.samples * np.hanning(len(seg))

    def neg_mag(f):
        return -abs(np.sum(weighted * np.exp(-2j * np.pi * f * t)))

    lo, hi = 0.5 * f_guess_hz, 1.5 * f_guess_hz
    grid = np.linspace(lo, hi, 201)
    best = grid[int(np.argmin([neg_mag(f) for f in grid]))]
    step = grid[1] - grid[0]
    res = optimize.minimize_scalar(neg_mag, bounds=(best - step, best + step),
                                   method="bounded", options={"xatol": 1e-6 * f_guess_hz})
    return float(res.x)


def rms_profile(scan: ScanData, chain: FilterChain, mode: FilterMode = "causal") -> np.ndarray:
    return np.array([rms(apply_filter(chain, w, mode)) for w in scan.waveforms])


def _crossing(angles: np.ndarray, level: np.ndarray, outer: int, inner: int) -> float:
    if not np.isfinite(level[outer]):
        raise NoCrossingError("cannot interpolate a -3 dB crossing against a zero-level sample")
    frac = (HALF_POWER_DB - level[inner]) / (level[outer] - level[inner])
    return float(angles[inner] + frac * (angles[outer] - angles[inner]))


def beamwidth_from_scan(scan: ScanData, f_d_hz: float, chain: FilterChain,
                        mode: FilterMode = "causal") -> float:
    """Half-power beamwidth in degrees from a cross-range scan.

    Per-position rms of the post-processed records is normalised to its
    maximum; the two -3 dB crossings either side of the maximum are found by
    linear interpolation in dB against angle.  ``f_d_hz`` is not used in the
    estimate itself and is kept so callers state which component they scan.
    """
    if f_d_hz <= 0:
        raise ValueError("f_d_hz must be > 0")
    levels = rms_profile(scan, chain, mode)
    peak = levels.max()
    if peak == 0.0:
        raise NoCrossingError("scan carries no energy")
    with np.errstate(divide="ignore"):
        level_db = 20.0 * np.log10(levels / peak)
    k = int(np.argmax(levels))
    n = levels.size
    if k in (0, n - 1):
        raise NoCrossingError("maximum sits at the edge of the scan")
    if k != n // 2:
        warnings.warn(f"rms maximum at index {k}, not at the median position {n // 2}",
                      stacklevel=2)
    if level_db[k - 1] < HALF_POWER_DB and level_db[k + 1] < HALF_POWER_DB:
        raise NoCrossingError("main lobe is covered by a single scan position")
    angles = scan.angles_deg
    below = np.flatnonzero(level_db[:k] < HALF_POWER_DB)
    above = np.flatnonzero(level_db[k + 1:] < HALF_POWER_DB)
    if below.size == 0 or above.size == 0:
        raise NoCrossingError("scan does not bracket both half-power points")
    left = int(below[-1])
    right = k + 1 + int(above[0])
    return (_crossing(angles, level_db, right, right - 1)
            - _crossing(angles, level_db, left, left + 1))


def source_level_db(p_rms_pa: float, range_m: float) -> float:
    """Level in dB re 1 uPa back-propagated spherically to 1 m."""
    if p_rms_pa <= 0 or range_m <= 0:
        raise ValueError("p_rms_pa and range_m must be > 0")
    return 20.0 * math.log10(p_rms_pa / MICROPASCAL) + 20.0 * math.log10(range_m)


def decode_symbols(received: Waveform, reference: Waveform, symbol_period_s: float,
                   n_symbols: int, first_arrival_s: float | None = None) -> list[int]:
    """Recover a +/-1 sequence by per-slot correlation with the "+1" reference.

    Slot k is centred on the expected arrival ``first_arrival_s + k T`` and
    spans one symbol period; the sign of the largest-magnitude correlation
    value inside it is the decision.  ``first_arrival_s`` defaults to the
    first sample time of ``received``.
    """
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    if first_arrival_s is None:
        first_arrival_s = received.start_time_s
    tol = 0.5 * received.dt
    last_arrival = first_arrival_s + (n_symbols - 1) * symbol_period_s
    if first_arrival_s < received.start_time_s - tol or last_arrival > received.end_time_s + tol:
        raise SlotMisalignmentError(
            f"{n_symbols} slots of {symbol_period_s:g} s starting at {first_arrival_s:g} s "
            f"do not fit in [{received.start_time_s:g}, {received.end_time_s:g}) s")
    corr = normalized_xcorr(reference, received)
    bits = []
    for k in range(n_symbols):
        centre = first_arrival_s + k * symbol_period_s
        sel = np.flatnonzero((corr.delays_s >= centre - 0.5 * symbol_period_s - tol)
                             & (corr.delays_s < centre + 0.5 * symbol_period_s - tol))
        if sel.size == 0:
            raise SlotMisalignmentError(f"slot {k} has no correlation lags")
        values = corr.values[sel]
        bits.append(1 if values[int(np.argmax(np.abs(values)))] > 0 else -1)
    return bits


def symbol_reaches_peak(spec: SymbolSpec, sample_rate_hz: float) -> bool:
    """Whether the SQRAM envelope attains sqrt(2) inside the gate."""
    t = np.arange(gate_samples(spec, sample_rate_hz)) / sample_rate_hz
    env = envelope_value(t, spec.difference_frequency_hz, spec.polarity)
    return bool(env.max() >= math.sqrt(2.0) * (1.0 - 1e-3))
