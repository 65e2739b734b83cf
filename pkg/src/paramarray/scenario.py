"""JSON scenario files.

A scenario bundles everything one CLI run needs.  Only ``schema_version`` is
required; every other key falls back to the tank defaults (855 kHz carrier,
20 kHz / 2-cycle "+1" symbol, hydrophone at 2 m, 20 MHz sampling).  Unknown
keys are rejected so typos do not silently fall back to defaults.  The full
schema is documented in ``docs/schemas.md``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ScenarioError
from .medium import MediumParams
from .transducer import SourceParams
from .waveform import DEFAULT_SAMPLE_RATE_HZ, SymbolSpec

SCHEMA_VERSION = 1
OUTPUT_NAMES = ("drive", "source", "primary", "dfw_raw", "hydrophone", "dfw_filtered",
                "reference", "spectrum", "report")


@dataclass(frozen=True)
class ScanConfig:
    span_m: float = 0.40
    step_m: float = 0.025
    positions_m: tuple[float, ...] | None = None
    alpha_total_np_per_m: float | None = None

    def positions(self) -> list[float]:
        if self.positions_m is not None:
            return list(self.positions_m)
        n = int(self.span_m / self.step_m + 1e-9)
        return [k * self.step_m for k in range(-n, n + 1)]


@dataclass(frozen=True)
class LinkConfig:
    bits: tuple[int, ...] | None = None
    count: int = 64
    guard_s: float | None = None
    noise_rms_fraction: float = 0.0
    reference: str = "antipodal"

    def __post_init__(self):
        if self.reference not in ("antipodal", "sinusoid"):
            raise ScenarioError(f"reference must be antipodal or sinusoid, got {self.reference!r}")
        if self.noise_rms_fraction < 0:
            raise ScenarioError("noise_rms_fraction must be >= 0")
        if self.bits is None and (isinstance(self.count, bool) or not isinstance(self.count, int)
                                  or self.count < 1):
            raise ScenarioError("count must be a positive integer")


@dataclass(frozen=True)
class Scenario:
    medium: MediumParams = field(default_factory=MediumParams)
    source: SourceParams = field(default_factory=SourceParams)
    symbol: SymbolSpec = field(default_factory=lambda: SymbolSpec(20e3, 2.0, 1))
    range_m: float = 2.0
    reference_range_m: float = 1.0
    filter_mode: str = "causal"
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    drive_amplitude_v: float = 1.0
    pre_s: float = 50e-6
    post_s: float = 1e-3
    primary_leakage: bool = False
    outputs: tuple[str, ...] = OUTPUT_NAMES
    scan: ScanConfig = field(default_factory=ScanConfig)
    link: LinkConfig = field(default_factory=LinkConfig)

    def __post_init__(self):
        if self.range_m <= 0 or self.reference_range_m <= 0:
            raise ScenarioError("range_m and reference_range_m must be > 0")
        if self.filter_mode not in ("causal", "zero_phase"):
            raise ScenarioError(f"filter_mode must be causal or zero_phase, got {self.filter_mode!r}")
        if self.sample_rate_hz <= 0:
            raise ScenarioError("sample_rate_hz must be > 0")
        if self.pre_s < 0 or self.post_s < 0:
            raise ScenarioError("pre_s and post_s must be >= 0")
        unknown = set(self.outputs) - set(OUTPUT_NAMES)
        if unknown:
            raise ScenarioError(f"unknown outputs {sorted(unknown)}; choose from {OUTPUT_NAMES}")

    @property
    def carrier_hz(self) -> float:
        return self.source.center_frequency_hz

    def with_changes(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ScenarioError(f"{path}: unknown field(s) {', '.join(unknown)}")
    for key, value in data.items():
        if isinstance(value, bool) and cls is not Scenario:
            raise ScenarioError(f"{path}.{key}: expected a number, got a boolean")
    try:
        return cls(**data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def scenario_from_dict(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario: top level must be a JSON object")
    data = dict(data)
    version = data.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"scenario.schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    kwargs: dict[str, Any] = {}
    nested = {"medium": MediumParams, "source": SourceParams, "symbol": SymbolSpec,
              "scan": ScanConfig, "link": LinkConfig}
    for key, cls in nested.items():
        if key in data:
            sub = data.pop(key)
            if key == "scan" and isinstance(sub, dict) and sub.get("positions_m") is not None:
                sub = dict(sub, positions_m=tuple(sub["positions_m"]))
            if key == "link" and isinstance(sub, dict) and sub.get("bits") is not None:
                sub = dict(sub, bits=parse_bits(sub["bits"], "scenario.link.bits"))
            kwargs[key] = _build(cls, sub, f"scenario.{key}")
    if "outputs" in data:
        outputs = data.pop("outputs")
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise ScenarioError("scenario.outputs: expected a list of strings")
        kwargs["outputs"] = tuple(outputs)
    kwargs.update(data)
    return _build(Scenario, kwargs, "scenario")


def parse_bits(value: Any, path: str = "bits") -> tuple[int, ...]:
    """Accept ``"+-+-"``, ``"1,-1"`` style strings or a list of +/-1."""
    if isinstance(value, str):
        text = value.replace(" ", "")
        if text and set(text) <= {"+", "-"}:
            return tuple(1 if c == "+" else -1 for c in text)
        try:
            value = [int(v) for v in text.split(",") if v]
        except ValueError:
            raise ScenarioError(f"{path}: cannot parse bit string {value!r}") from None
    if not isinstance(value, (list, tuple)) or not value:
        raise ScenarioError(f"{path}: expected a non-empty bit sequence")
    if any(isinstance(b, bool) or b not in (1, -1) for b in value):
        raise ScenarioError(f"{path}: bits must be +1 or -1")
    return tuple(int(b) for b in value)


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file; errors carry line or field context."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def scenario_to_dict(scenario: Scenario) -> dict:
    data = dataclasses.asdict(scenario)
    for key in ("outputs",):
        data[key] = list(data[key])
    return {"schema_version": SCHEMA_VERSION, **data}
