"""CSV and WAV waveform files.

CSV layout is a ``time_s,value`` header followed by one row per sample, both
columns printed with 9 significant digits.  Nine digits pin down any float32
value, so samples round-trip exactly for float32 data; on import the values
are rounded back to float32 for that reason.  Every timestep is checked
against the median step, and the sample rate is recovered as the shortest
decimal value that reproduces the time column.

JSON waveform files hold the sample rate, start time, unit and samples at
full double precision.

WAV files are mono IEEE float32 with the canonical 44-byte header and no
extra chunks.  The sample-rate field is an integer, so non-integer rates are
rounded.  WAV carries no start time; imported WAV waveforms start at t = 0.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import NonuniformTimestepError, WaveformParseError
from .waveform import Waveform

FORMATS = ("csv", "wav", "json")
CSV_HEADER = ("time_s", "value")
#: tolerated relative deviation of one timestep from the fitted step
MAX_RELATIVE_JITTER = 1e-6
SIGNIFICANT_DIGITS = 9

_WAVE_FORMAT_IEEE_FLOAT = 3


def _fmt(x: float) -> str:
    return f"{x:.{SIGNIFICANT_DIGITS}g}"


def _print_resolution(t: np.ndarray) -> float:
    """Half a unit in the last printed digit of the largest timestamp."""
    biggest = float(np.max(np.abs(t)))
    if biggest == 0.0:
        return 0.0
    return 0.5 * 10.0 ** (math.floor(math.log10(biggest)) - (SIGNIFICANT_DIGITS - 1))


def _recover_rate(t: np.ndarray) -> float:
    """Shortest decimal sample rate consistent with the printed time column.

    The least-squares rate is rounded to 1, 2, ... significant digits and the
    first candidate that regenerates every timestamp to within print
    resolution wins, so rates such as 20 MHz come back exactly.
    """
    n = np.arange(t.size)
    fitted = 1.0 / np.polyfit(n, t, 1)[0]
    tol = 2.0 * _print_resolution(t) + 4.0 * np.finfo(float).eps * float(np.max(np.abs(t)))
    for digits in range(1, 16):
        candidate = float(f"{fitted:.{digits}g}")
        if np.max(np.abs(t - (t[0] + n / candidate))) <= tol:
            return candidate
    return float(fitted)


def write_csv(waveform: Waveform, path: str | Path) -> None:
    t = waveform.times()
    lines = [",".join(CSV_HEADER)]
    lines += [f"{_fmt(ti)},{_fmt(v)}" for ti, v in zip(t, waveform.samples)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path, unit: str = "pascal") -> Waveform:
    path = Path(path)
    times, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise WaveformParseError(f"{path}: row 1: expected header 'time_s,value', got {header!r}")
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise WaveformParseError(f"{path}: row {row_number}: expected 2 columns, got {len(row)}")
            try:
                t, v = float(row[0]), float(row[1])
            except ValueError:
                raise WaveformParseError(f"{path}: row {row_number}: non-numeric value in {row!r}") from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise WaveformParseError(f"{path}: row {row_number}: non-finite value")
            times.append(t)
            values.append(v)
    if len(times) < 2:
        raise WaveformParseError(f"{path}: need at least 2 samples to infer a sample rate")

    t = np.array(times)
    steps = np.diff(t)
    dt = float(np.median(steps))
    if not dt > 0:
        raise NonuniformTimestepError(f"{path}: timestamps are not increasing")
    tol = MAX_RELATIVE_JITTER * dt + 2.0 * _print_resolution(t)
    bad = np.flatnonzero(np.abs(steps - dt) > tol)
    if bad.size:
        k = int(bad[0])
        raise NonuniformTimestepError(
            f"{path}: row {k + 3}: timestep {steps[k]:.6g} s deviates from {dt:.6g} s "
            f"by more than {MAX_RELATIVE_JITTER:g} relative")
    sample_rate = _recover_rate(t)
    samples = np.array(values, dtype=np.float32).astype(float)
    return Waveform(samples, sample_rate, float(t[0]), unit)


def wav_bytes(waveform: Waveform) -> bytes:
    """Canonical 44-byte-header mono float32 WAV image of ``waveform``."""
    if waveform.samples.size and np.max(np.abs(waveform.samples)) > np.finfo(np.float32).max:
        raise ValueError("samples exceed the float32 range")
    rate = int(round(waveform.sample_rate_hz))
    if not 0 < rate < 2 ** 32:
        raise ValueError(f"sample rate {waveform.sample_rate_hz:g} Hz does not fit a WAV header")
    data = waveform.samples.astype("<f4").tobytes()
    header = struct.pack("<4sI4s4sIHHIIHH4sI",
                         b"RIFF", 36 + len(data), b"WAVE",
                         b"fmt ", 16, _WAVE_FORMAT_IEEE_FLOAT, 1, rate, 4 * rate, 4, 32,
                         b"data", len(data))
    return header + data


def write_wav(waveform: Waveform, path: str | Path) -> None:
    Path(path).write_bytes(wav_bytes(waveform))


def read_wav(path: str | Path, unit: str = "pascal") -> Waveform:
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError, struct.error) as exc:
        raise WaveformParseError(f"{path}: not a readable WAV file ({exc})") from None
    if data.ndim != 1:
        raise WaveformParseError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if np.issubdtype(data.dtype, np.integer):
        # PCM captures are scaled to +/-1 full scale
        info = np.iinfo(data.dtype)
        mid = (int(info.max) + int(info.min) + 1) / 2.0
        samples = (data.astype(float) - mid) / (info.max - mid)
    else:
        samples = data.astype(float)
    return Waveform(samples, float(rate), 0.0, unit)


def write_json(waveform: Waveform, path: str | Path) -> None:
    doc = {"sample_rate_hz": waveform.sample_rate_hz, "start_time_s": waveform.start_time_s,
           "unit": waveform.unit, "samples": waveform.samples.tolist()}
    Path(path).write_text(json.dumps(doc) + "\n")


def read_json(path: str | Path, unit: str | None = None) -> Waveform:
    try:
        doc = json.loads(Path(path).read_text())
        return Waveform(doc["samples"], float(doc["sample_rate_hz"]),
                        float(doc.get("start_time_s", 0.0)), unit or doc.get("unit", "pascal"))
    except json.JSONDecodeError as exc:
        raise WaveformParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise WaveformParseError(f"{path}: invalid waveform document ({exc})") from None


_WRITERS = {"csv": write_csv, "wav": write_wav, "json": write_json}


def export_waveform(waveform: Waveform, path: str | Path, fmt: str) -> None:
    if fmt not in _WRITERS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    _WRITERS[fmt](waveform, path)


def import_waveform(path: str | Path, fmt: str | None = None,
                    unit: str | None = None) -> Waveform:
    """Read a waveform; ``fmt`` defaults to the file extension.

    ``unit`` overrides the stored unit; CSV and WAV carry none and default
    to pascal.
    """
    if fmt is None:
        fmt = Path(path).suffix.lstrip(".").lower()
    if fmt == "csv":
        return read_csv(path, unit or "pascal")
    if fmt == "wav":
        return read_wav(path, unit or "pascal")
    if fmt == "json":
        return read_json(path, unit)
    raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
