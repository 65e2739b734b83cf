"""End-to-end channel: drive -> transducer -> propagation -> self-demodulation -> filters.

Time bases: the drive starts at its own ``start_time_s`` with t = 0 the
trigger.  The transducer output is the source-face pressure on that clock;
it reaches the reference range ``r_ref`` after ``r_ref / c0`` and the
hydrophone range after ``r / c0``.  The demodulated pressure is placed on
the hydrophone's clock.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from . import analysis, dsp
from .errors import StageError
from .medium import absorption_np_per_m, rayleigh_distance
from .propagation import BerktayParams, berktay_demodulate, directivity, primary_at_range
from .scenario import Scenario
from .transducer import drive_to_pressure
from .waveform import Waveform, symbol_period_s, synth_sequence, synth_symbol


@dataclass(frozen=True, eq=False)
class ChannelOutput:
    drive: Waveform
    source: Waveform          # source-face pressure, trigger clock
    primary: Waveform         # primary field at the hydrophone range
    envelope: Waveform        # unity-peak envelope on the reference-range clock
    dfw_raw: Waveform         # demodulated pressure at the hydrophone
    hydrophone: Waveform      # what a hydrophone at range would record
    dfw_filtered: Waveform
    chain: dsp.FilterChain


@contextmanager
def stage(name: str):
    """Re-raise input errors from the enclosed block tagged with ``name``."""
    try:
        yield
    except StageError:
        raise
    except ValueError as exc:
        raise StageError(name, exc) from exc


def primary_absorption(scenario: Scenario) -> float:
    return absorption_np_per_m(scenario.carrier_hz, scenario.medium)


def rayleigh_m(scenario: Scenario) -> float:
    return rayleigh_distance(scenario.source.aperture_area_m2, scenario.carrier_hz,
                             scenario.medium)


def berktay_params(scenario: Scenario) -> BerktayParams:
    return BerktayParams.from_medium(scenario.medium, scenario.source.primary_pressure_pa,
                                     scenario.source.aperture_area_m2, scenario.range_m,
                                     primary_absorption(scenario))


def extract_envelope(pressure: Waveform, peak_pressure_pa: float) -> Waveform:
    """Analytic-signal magnitude divided by ``peak_pressure_pa``."""
    env = np.abs(sps.hilbert(pressure.samples)) / peak_pressure_pa
    return pressure.replace(env, unit="dimensionless")


def run_channel(drive: Waveform, scenario: Scenario) -> ChannelOutput:
    c0 = scenario.medium.sound_speed
    r, r_ref = scenario.range_m, scenario.reference_range_m
    with stage("transducer"):
        source = drive_to_pressure(drive, scenario.source)
    with stage("propagation"):
        at_ref = source.delayed(r_ref / c0)
        primary = primary_at_range(at_ref, r, r_ref, scenario.carrier_hz, scenario.medium,
                                   rayleigh_m(scenario))
    with stage("demodulation"):
        envelope = extract_envelope(at_ref, scenario.source.primary_pressure_pa)
        dfw = berktay_demodulate(envelope, berktay_params(scenario),
                                 scenario.symbol.difference_frequency_hz)
        dfw = dfw.delayed((r - r_ref) / c0)
        hydrophone = dfw.replace(dfw.samples + primary.samples)
    with stage("filtering"):
        chain = dsp.postprocess_chain(scenario.symbol.difference_frequency_hz,
                                      scenario.sample_rate_hz)
        to_filter = hydrophone if scenario.primary_leakage else dfw
        filtered = dsp.apply_filter(chain, to_filter, scenario.filter_mode)
    return ChannelOutput(drive, source, primary, envelope, dfw, hydrophone, filtered, chain)


def symbol_drive(scenario: Scenario) -> Waveform:
    return synth_symbol(scenario.symbol, scenario.carrier_hz, scenario.sample_rate_hz,
                        scenario.drive_amplitude_v, scenario.pre_s, scenario.post_s)


def reference_for(scenario: Scenario, chain: dsp.FilterChain) -> Waveform:
    sym = scenario.symbol
    return analysis.make_reference(sym.difference_frequency_hz, sym.n_cycles,
                                   scenario.sample_rate_hz, chain, scenario.filter_mode)


def arrival_delay_s(scenario: Scenario) -> float:
    return scenario.range_m / scenario.medium.sound_speed


def pulse_gate(scenario: Scenario, reference: Waveform) -> tuple[float, float]:
    """Body of the expected filtered pulse on the hydrophone clock.

    The active span of the same-chain reference placed at ``r / c0``, less
    one difference period at each edge when the span holds at least three.
    Using the reference rather than the received record keeps the gate off
    the polarity-independent gate-edge transients.
    """
    period = 1.0 / scenario.symbol.difference_frequency_hz
    t0, t1 = analysis.active_interval(reference.delayed(arrival_delay_s(scenario)))
    return (t0 + period, t1 - period) if t1 - t0 >= 3 * period else (t0, t1)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    channel: ChannelOutput
    reference: Waveform
    report: dict = field(default_factory=dict)


def simulate(scenario: Scenario) -> SimulationResult:
    """Single-symbol run plus the quality report."""
    with stage("synthesis"):
        drive = symbol_drive(scenario)
    channel = run_channel(drive, scenario)
    with stage("analysis"):
        return _simulation_report(scenario, channel)


def _simulation_report(scenario: Scenario, channel: ChannelOutput) -> SimulationResult:
    reference = reference_for(scenario, channel.chain)
    sym = scenario.symbol
    f_d = sym.difference_frequency_hz
    filtered = channel.dfw_filtered

    quality = analysis.pulse_quality(filtered, reference)
    aligned = reference.delayed(arrival_delay_s(scenario))
    interior = pulse_gate(scenario, reference)
    phase = analysis.phase_difference_deg(aligned, filtered, f_d, interior)
    frequency = analysis.measure_frequency_hz(filtered, f_d, interior)
    t0, t1 = analysis.active_interval(aligned)
    p_rms = dsp.rms(filtered, (t0, min(t1, filtered.end_time_s)))

    warnings = []
    if not analysis.symbol_reaches_peak(sym, scenario.sample_rate_hz):
        warnings.append("distortion: SQRAM envelope never reaches its peak inside the gate")

    report = {
        "difference_frequency_hz": f_d,
        "n_cycles": sym.n_cycles,
        "polarity": sym.polarity,
        "range_m": scenario.range_m,
        "filter_mode": scenario.filter_mode,
        "peak_correlation": quality.peak_correlation,
        "arrival_time_s": quality.arrival_time_s,
        "expected_arrival_s": arrival_delay_s(scenario),
        "phase_deg": phase,
        "measured_frequency_hz": frequency,
        "peak_pressure_pa": float(np.max(np.abs(filtered.samples))),
        "rms_pressure_pa": p_rms,
        "source_level_db": analysis.source_level_db(p_rms, scenario.range_m) if p_rms > 0 else None,
        "ideal_peak_pa": berktay_params(scenario).scale * (2 * math.pi * f_d) ** 2,
        "source_peak_pa": float(np.max(np.abs(channel.source.samples))),
        "warnings": warnings,
    }
    return SimulationResult(channel, reference, report)


def simulate_scan(scenario: Scenario) -> tuple[analysis.ScanData, float]:
    """Cross-range scan built from the on-axis record and the array directivity."""
    with stage("synthesis"):
        drive = symbol_drive(scenario)
    channel = run_channel(drive, scenario)
    cfg = scenario.scan
    f_d = scenario.symbol.difference_frequency_hz
    with stage("directivity"):
        alpha_t = cfg.alpha_total_np_per_m or primary_absorption(scenario)
        positions = np.array(cfg.positions(), dtype=float)
        angles = np.degrees(np.arctan2(positions, scenario.range_m))
        on_axis = channel.hydrophone if scenario.primary_leakage else channel.dfw_raw
        gains = directivity(angles, f_d, alpha_t, scenario.medium)
        waves = [on_axis.scaled(float(g)) for g in np.atleast_1d(gains)]
        scan = analysis.ScanData(scenario.range_m, positions, waves)
    with stage("beamwidth"):
        width = analysis.beamwidth_from_scan(scan, f_d, channel.chain, scenario.filter_mode)
    return scan, width


@dataclass(frozen=True, eq=False)
class LinkResult:
    bits: list[int]
    decoded: list[int]
    channel: ChannelOutput
    received: Waveform
    reference: Waveform

    @property
    def n_correct(self) -> int:
        return sum(a == b for a, b in zip(self.bits, self.decoded))


def link_bits(scenario: Scenario, seed: int = 0) -> list[int]:
    if scenario.link.bits is not None:
        return list(scenario.link.bits)
    rng = np.random.default_rng(seed)
    return [int(b) for b in rng.choice([-1, 1], size=scenario.link.count)]


def symbol_response(scenario: Scenario, polarity: int) -> Waveform:
    """Noiseless filtered response to a single symbol of the given polarity."""
    single = scenario.with_changes(symbol=scenario.symbol.with_polarity(polarity))
    return run_channel(symbol_drive(single), single).dfw_filtered


def antipodal_template(scenario: Scenario, threshold: float = 1e-4) -> Waveform:
    """Half the difference of the "+1" and "-1" responses, on the trigger clock.

    The gate edges step the squared envelope by the same amount for both
    polarities, so every received symbol carries a polarity-independent
    component.  Only the antipodal part carries the bit, and it is the
    matched filter for a sign decision.  Correlation against this template
    peaks at the symbol trigger time plus ``r / c0``; samples below
    ``threshold`` times the peak are trimmed off both ends.
    """
    plus, minus = symbol_response(scenario, 1), symbol_response(scenario, -1)
    out = plus.replace(0.5 * (plus.samples - minus.samples))
    out = out.delayed(-arrival_delay_s(scenario))
    t0, t1 = analysis.active_interval(out, threshold)
    return out.window(t0, t1)


def simulate_link(scenario: Scenario, bits: list[int] | None = None, seed: int = 0) -> LinkResult:
    """Send a coded sequence through the channel and decode it.

    Additive white Gaussian noise with RMS ``noise_rms_fraction`` times the
    filtered signal RMS is added to the received record.  ``seed`` drives
    both the random bits (when none are given) and the noise.
    """
    if bits is None:
        bits = link_bits(scenario, seed)
    sym = scenario.symbol
    guard = scenario.link.guard_s if scenario.link.guard_s is not None else sym.duration_s
    with stage("synthesis"):
        period = symbol_period_s(sym, guard, scenario.sample_rate_hz)
        drive = synth_sequence(bits, sym, scenario.carrier_hz, guard, scenario.sample_rate_hz,
                               scenario.drive_amplitude_v)
        drive = drive.padded(max(scenario.pre_s, period), scenario.post_s + period)
    channel = run_channel(drive, scenario)
    received = channel.dfw_filtered
    if scenario.link.noise_rms_fraction > 0:
        rng = np.random.default_rng([seed, 1])
        sigma = scenario.link.noise_rms_fraction * dsp.rms(received)
        received = received.replace(received.samples + rng.normal(0.0, sigma, len(received)))
    if scenario.link.reference == "antipodal":
        reference = antipodal_template(scenario)
    else:
        reference = reference_for(scenario, channel.chain)
    with stage("decoding"):
        decoded = analysis.decode_symbols(received, reference, period, len(bits),
                                          first_arrival_s=arrival_delay_s(scenario))
    return LinkResult(list(bits), decoded, channel, received, reference)
