"""Command-line front end.

Every command loads and validates the whole scenario, runs all of its
computation, and only then writes files, so a configuration or stage error
never leaves partial output behind.  Reports go to stdout in readable form
and, with ``--out``, to ``report.txt`` and ``report.json``.

Exit status: 0 on success, 1 when a pipeline stage or file write fails,
2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, analysis, dsp, pipeline, waveio
from .errors import ParamArrayError, ScenarioError, StageError
from .medium import (absorption_db_per_kyd, absorption_range, relaxation_frequency_khz,
                     shock_distance)
from .propagation import halfpower_beamwidth_deg
from .scenario import Scenario, load_scenario, parse_bits
from .transducer import tuned_resonance_hz
from .waveform import Waveform

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

WAVEFORM_OUTPUTS = ("drive", "source", "primary", "dfw_raw", "hydrophone", "dfw_filtered",
                    "reference")


class UsageError(ParamArrayError):
    pass


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="JSON scenario file (defaults if omitted)")
    common.add_argument("--out", type=Path, help="output directory; nothing is written without it")
    common.add_argument("--format", choices=waveio.FORMATS, default="csv",
                        help="file format for waveform series (default csv)")
    common.add_argument("--mode", choices=("causal", "zero_phase"),
                        help="override the scenario's filter mode")
    common.add_argument("--seed", type=_u64, default=0, help="seed for random bits and noise")

    parser = argparse.ArgumentParser(
        prog="paramarray",
        description="Parametric-array SQRAM pulse simulation and analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("distances", parents=[common],
                   help="Rayleigh, absorption and shock distances for the scenario")
    sub.add_parser("simulate", parents=[common],
                   help="single-symbol run: waveforms, spectrum and quality report")
    sub.add_parser("scan", parents=[common],
                   help="cross-range scan and half-power beamwidth")
    link = sub.add_parser("link", parents=[common], help="send and decode a coded symbol sequence")
    link.add_argument("--bits", help='bit string such as "+-+-" or "1,-1,1"')
    link.add_argument("--count", type=_positive_int, help="number of random bits (uses --seed)")
    export = sub.add_parser("export", parents=[common],
                            help="write one simulated signal, or convert a waveform file")
    export.add_argument("--signal", choices=WAVEFORM_OUTPUTS, default="dfw_filtered")
    export.add_argument("--input", type=Path, help="convert this waveform file instead")
    imp = sub.add_parser("import", parents=[common],
                         help="analyse an external capture against the scenario's reference")
    imp.add_argument("path", type=Path, help="CSV, WAV or JSON waveform")
    imp.add_argument("--prefiltered", action="store_true",
                     help="the capture already went through the post-processing filters")
    return parser


# --- helpers -----------------------------------------------------------------

def _scenario(args) -> Scenario:
    scenario = load_scenario(args.scenario) if args.scenario is not None else Scenario()
    if args.mode is not None:
        scenario = scenario.with_changes(filter_mode=args.mode)
    return scenario


def _check_out_dir(out: Path | None) -> None:
    if out is None:
        return
    if out.exists():
        if not out.is_dir():
            raise UsageError(f"--out {out}: exists and is not a directory")
        probe = out
    else:
        probe = out.parent
        while not probe.exists():
            probe = probe.parent
    if not os.access(probe, os.W_OK):
        raise UsageError(f"--out {out}: not writable")


def _fmt_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return "; ".join(map(str, value)) if value else "none"
    return str(value)


def render_report(title: str, report: dict) -> str:
    width = max(len(k) for k in report)
    lines = [title] + [f"  {k.ljust(width)}  {_fmt_value(v)}" for k, v in report.items()]
    return "\n".join(lines) + "\n"


def _json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(report: dict) -> dict:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    out = {}
    for key, value in report.items():
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, float) and not math.isfinite(value):
            value = None
        out[key] = value
    return out


def _series_csv(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    body = "\n".join(",".join(f"{float(v):.9g}" for v in row) for row in rows)
    return ",".join(names) + "\n" + body + "\n"


class Artifacts:
    """Files collected in memory and written together at the end."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self._items: list[tuple[str, Callable[[Path], None]]] = []

    def waveform(self, name: str, wave: Waveform, fmt: str | None = None) -> None:
        fmt = fmt or self.fmt
        self._items.append((f"{name}.{fmt}", lambda p: waveio.export_waveform(wave, p, fmt)))

    def text(self, filename: str, text: str) -> None:
        self._items.append((filename, lambda p: p.write_text(text)))

    def table(self, name: str, columns: dict[str, np.ndarray]) -> None:
        if self.fmt == "json":
            doc = {k: [float(v) for v in col] for k, col in columns.items()}
            self.text(f"{name}.json", json.dumps(doc) + "\n")
        else:
            self.text(f"{name}.csv", _series_csv(columns))

    def write(self, out: Path) -> list[Path]:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for filename, writer in self._items:
            path = out / filename
            writer(path)
            written.append(path)
        return written


def _finish(args, title: str, report: dict, artifacts: Artifacts | None = None) -> int:
    report = _clean(report)
    text = render_report(title, report)
    sys.stdout.write(text)
    if args.out is not None:
        artifacts = artifacts or Artifacts(args.format)
        artifacts.text("report.txt", text)
        artifacts.text("report.json", _json(report))
        artifacts.write(args.out)
    return EXIT_OK


def _bit_string(bits) -> str:
    return "".join("+" if b > 0 else "-" for b in bits)


# --- commands ----------------------------------------------------------------

def distances_report(scenario: Scenario) -> dict:
    medium, source = scenario.medium, scenario.source
    f0 = scenario.carrier_hz
    r_f = pipeline.rayleigh_m(scenario)
    r_a = absorption_range(f0, medium)
    r_s = shock_distance(source.primary_pressure_pa, f0, medium)
    named = sorted([("range", scenario.range_m), ("R_F", r_f), ("R_s", r_s), ("R_a", r_a)],
                   key=lambda item: item[1])
    near = scenario.range_m < r_f
    return {
        "carrier_hz": f0,
        "relaxation_frequency_khz": relaxation_frequency_khz(medium.temperature_c),
        "absorption_db_per_kyd": absorption_db_per_kyd(f0 / 1e3, medium),
        "absorption_np_per_m": pipeline.primary_absorption(scenario),
        "rayleigh_distance_m": r_f,
        "absorption_range_m": r_a,
        "shock_distance_m": r_s,
        "range_m": scenario.range_m,
        "ordering": " < ".join(name for name, _ in named),
        "inside_near_field": near,
        "flag": "inside near field" if near else "far field",
        "tuned_resonance_hz": tuned_resonance_hz(source.tuning_inductance_h,
                                                 source.clamp_capacitance_f),
    }


def cmd_distances(args) -> int:
    scenario = _scenario(args)
    _check_out_dir(args.out)
    with pipeline.stage("distances"):
        report = distances_report(scenario)
    return _finish(args, "critical distances", report)


def simulate_artifacts(result: pipeline.SimulationResult, scenario: Scenario,
                       fmt: str) -> Artifacts:
    channel = result.channel
    artifacts = Artifacts(fmt)
    waves = {
        "drive": channel.drive,
        "source": channel.source,
        "primary": channel.primary,
        "dfw_raw": channel.dfw_raw,
        "hydrophone": channel.hydrophone,
        "dfw_filtered": channel.dfw_filtered,
        "reference": result.reference.delayed(pipeline.arrival_delay_s(scenario)),
    }
    for name in scenario.outputs:
        if name in waves:
            artifacts.waveform(name, waves[name])
        elif name == "spectrum":
            freqs, mag = dsp.spectrum(channel.primary)
            artifacts.table("spectrum", {"frequency_hz": freqs, "magnitude_pa": mag})
    return artifacts


def cmd_simulate(args) -> int:
    scenario = _scenario(args)
    _check_out_dir(args.out)
    result = pipeline.simulate(scenario)
    report = dict(result.report, seed=args.seed)
    wanted = "report" in scenario.outputs
    artifacts = simulate_artifacts(result, scenario, args.format)
    if not wanted:
        sys.stdout.write(render_report("simulation", _clean(report)))
        if args.out is not None:
            artifacts.write(args.out)
        return EXIT_OK
    return _finish(args, "simulation", report, artifacts)


def cmd_scan(args) -> int:
    scenario = _scenario(args)
    _check_out_dir(args.out)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scan, width = pipeline.simulate_scan(scenario)
    f_d = scenario.symbol.difference_frequency_hz
    with pipeline.stage("analysis"):
        chain = dsp.postprocess_chain(f_d, scenario.sample_rate_hz)
        levels = analysis.rms_profile(scan, chain, scenario.filter_mode)
        alpha_t = scenario.scan.alpha_total_np_per_m or pipeline.primary_absorption(scenario)
        theory = halfpower_beamwidth_deg(f_d, alpha_t, scenario.medium)
    with np.errstate(divide="ignore"):
        level_db = 20.0 * np.log10(levels / levels.max())
    artifacts = Artifacts(args.format)
    for k, wave in enumerate(scan.waveforms):
        artifacts.waveform(f"scan_{k:03d}", wave)
    artifacts.table("profile", {"position_m": scan.positions_m, "angle_deg": scan.angles_deg,
                                "rms_pa": levels, "level_db": np.maximum(level_db, -999.0)})
    report = {
        "difference_frequency_hz": f_d,
        "range_m": scenario.range_m,
        "n_positions": int(scan.positions_m.size),
        "alpha_total_np_per_m": alpha_t,
        "beamwidth_deg": width,
        "theoretical_beamwidth_deg": theory,
        "relative_error": width / theory - 1.0,
        "warnings": [str(w.message) for w in caught],
    }
    return _finish(args, "cross-range scan", report, artifacts)


def cmd_link(args) -> int:
    scenario = _scenario(args)
    bits = None
    if args.bits is not None:
        bits = list(parse_bits(args.bits, "--bits"))
    elif args.count is not None:
        scenario = scenario.with_changes(
            link=dataclasses.replace(scenario.link, bits=None, count=args.count))
    _check_out_dir(args.out)
    result = pipeline.simulate_link(scenario, bits, args.seed)
    n = len(result.bits)
    report = {
        "n_symbols": n,
        "n_correct": result.n_correct,
        "symbol_error_rate": 1.0 - result.n_correct / n,
        "bits": _bit_string(result.bits),
        "decoded": _bit_string(result.decoded),
        "difference_frequency_hz": scenario.symbol.difference_frequency_hz,
        "n_cycles": scenario.symbol.n_cycles,
        "noise_rms_fraction": scenario.link.noise_rms_fraction,
        "reference": scenario.link.reference,
        "filter_mode": scenario.filter_mode,
        "seed": args.seed,
    }
    artifacts = Artifacts(args.format)
    artifacts.waveform("received", result.received)
    artifacts.waveform("template", result.reference)
    return _finish(args, "coded link", report, artifacts)


def cmd_export(args) -> int:
    if args.out is None:
        raise UsageError("export needs --out")
    if args.input is not None:
        _check_out_dir(args.out)
        with pipeline.stage("import"):
            wave = waveio.import_waveform(args.input)
        name = args.input.stem
    else:
        scenario = _scenario(args)
        _check_out_dir(args.out)
        result = pipeline.simulate(scenario)
        artifacts = simulate_artifacts(result, scenario.with_changes(outputs=(args.signal,)),
                                       args.format)
        artifacts.write(args.out)
        sys.stdout.write(f"wrote {args.out / (args.signal + '.' + args.format)}\n")
        return EXIT_OK
    artifacts = Artifacts(args.format)
    artifacts.waveform(name, wave)
    artifacts.write(args.out)
    sys.stdout.write(f"wrote {args.out / (name + '.' + args.format)}\n")
    return EXIT_OK


def import_report(wave: Waveform, scenario: Scenario, prefiltered: bool) -> dict:
    f_d = scenario.symbol.difference_frequency_hz
    chain = dsp.postprocess_chain(f_d, wave.sample_rate_hz)
    measured = wave if prefiltered else dsp.apply_filter(chain, wave, scenario.filter_mode)
    reference = analysis.make_reference(f_d, scenario.symbol.n_cycles, wave.sample_rate_hz,
                                        chain, scenario.filter_mode)
    quality = analysis.pulse_quality(measured, reference)
    aligned = reference.delayed(quality.arrival_time_s)
    t0, t1 = analysis.active_interval(aligned)
    p_rms = dsp.rms(measured, (t0, min(t1, measured.end_time_s)))
    return {
        "n_samples": len(wave),
        "sample_rate_hz": wave.sample_rate_hz,
        "start_time_s": wave.start_time_s,
        "peak_correlation": quality.peak_correlation,
        "arrival_time_s": quality.arrival_time_s,
        "measured_frequency_hz": analysis.measure_frequency_hz(measured, f_d, (t0, t1)),
        "peak_pressure_pa": float(np.max(np.abs(measured.samples))),
        "rms_pressure_pa": p_rms,
        "source_level_db": analysis.source_level_db(p_rms, scenario.range_m) if p_rms > 0 else None,
    }


def cmd_import(args) -> int:
    scenario = _scenario(args)
    _check_out_dir(args.out)
    with pipeline.stage("import"):
        wave = waveio.import_waveform(args.path)
    with pipeline.stage("analysis"):
        report = import_report(wave, scenario, args.prefiltered)
    artifacts = Artifacts(args.format)
    if not args.prefiltered:
        chain = dsp.postprocess_chain(scenario.symbol.difference_frequency_hz, wave.sample_rate_hz)
        artifacts.waveform("filtered", dsp.apply_filter(chain, wave, scenario.filter_mode))
    return _finish(args, f"capture {args.path.name}", report, artifacts)


COMMANDS = {
    "distances": cmd_distances,
    "simulate": cmd_simulate,
    "scan": cmd_scan,
    "link": cmd_link,
    "export": cmd_export,
    "import": cmd_import,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    prog = f"paramarray {args.command}"
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, UsageError) as exc:
        print(f"{prog}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"{prog}: error in {exc.stage} stage: {exc.__cause__}", file=sys.stderr)
        return EXIT_FAILURE
    except ParamArrayError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"{prog}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
