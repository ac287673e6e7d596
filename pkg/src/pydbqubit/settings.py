"""YAML configuration schema.

A document has the sections ``material``, ``layout``, ``well``, ``qubit``,
``pulses``, ``noise`` and ``run``; only ``layout`` is required. Unknown keys are
rejected and every error carries the dotted path of the offending field.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import yaml

from .errors import ConfigError, DbQubitError
from .manifest import sha256_json
from .physics.model import DeviceLayout, MaterialParams


@dataclass(frozen=True)
class WellSettings:
    shape: str = "square"
    width: float = 3.0
    calibration: str = "anchor"
    """``anchor`` fits the depth to the 7.72 Å splitting, ``level`` to the single-well level."""

    target_level: Optional[float] = None
    anchor_separation: float = 7.72
    anchor_splitting: float = 0.0887
    fit_width: bool = False


@dataclass(frozen=True)
class QubitSettings:
    splitting_source: str = "explicit"
    splitting: float = 0.0887
    zz_convention: str = "projected"
    t_per_qubit: Optional[tuple[float, ...]] = None
    e_os: Optional[float] = None
    eta: float = 0.0
    u0: Optional[float] = None


@dataclass(frozen=True)
class SegmentSettings:
    duration_fs: float
    deltav: tuple[float, ...]
    tunneling: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class PulseSettings:
    segments: tuple[SegmentSettings, ...] = ()


@dataclass(frozen=True)
class DriftSettings:
    enabled: bool = False
    eta0: float = 0.5
    tau_relax_fs: float = 1.0e6
    qubit: int = 0


@dataclass(frozen=True)
class PhononSettings:
    phonon_energy: float = 0.022
    debye_energy: float = 0.055
    envelope_radius: Optional[float] = None
    """Å; ``None`` takes the material's effective Bohr radius."""


@dataclass(frozen=True)
class NoiseSettings:
    dephasing_rate_hz: float = 0.0
    relaxation_rate_hz: float = 0.0
    readout_error: float = 0.0
    drift: DriftSettings = field(default_factory=DriftSettings)
    phonon: PhononSettings = field(default_factory=PhononSettings)


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    shots: int = 10000
    workers: int = 1
    s_min: float = 3.84
    s_max: float = 20.0
    s_step: float = 0.5
    duration_fs: Optional[float] = None
    samples_per_period: int = 32
    init_tilt: Optional[float] = None
    time_cap_fs: float = 5.0e7
    plateau_tol: float = 1.0e-6
    readout_state: str = "1"
    draws: int = 100
    cphase_mode: str = "ideal"
    cphase_tilt: Optional[float] = None


@dataclass(frozen=True)
class SimulationConfig:
    layout: DeviceLayout
    material: MaterialParams = field(default_factory=MaterialParams)
    well: WellSettings = field(default_factory=WellSettings)
    qubit: QubitSettings = field(default_factory=QubitSettings)
    pulses: PulseSettings = field(default_factory=PulseSettings)
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    run: RunSettings = field(default_factory=RunSettings)

    def to_dict(self) -> dict[str, Any]:
        return config_to_dict(self)

    @property
    def config_hash(self) -> str:
        return sha256_json(self.to_dict())


_CHOICES = {
    "well.shape": ("square", "gaussian"),
    "well.calibration": ("anchor", "level"),
    "qubit.splitting_source": ("explicit", "calibrated_well"),
    "qubit.zz_convention": ("projected", "literal"),
    "run.readout_state": ("0", "1", "+", "-"),
    "run.cphase_mode": ("echo", "ideal"),
}


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _mapping(value: Any, path: str, allowed: Iterable[str]) -> dict:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    allowed = set(allowed)
    for key in value:
        if key not in allowed:
            raise ConfigError(_join(path, str(key)), f"unknown key (allowed: {', '.join(sorted(allowed))})")
    return dict(value)


def _number(value: Any, path: str) -> float:
    # YAML 1.1 reads exponents without a sign, such as 1e9, as strings.
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    return value


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _boolean(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true or false, got {value!r}")
    return value


def _text(value: Any, path: str) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ConfigError(path, f"expected a string, got {value!r}")
    value = str(value)
    choices = _CHOICES.get(path)
    if choices and value not in choices:
        raise ConfigError(path, f"expected one of {', '.join(choices)}, got {value!r}")
    return value


def _numbers(value: Any, path: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(path, f"expected a list of numbers, got {value!r}")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _check_range(value: float, path: str, lo: Optional[float] = None, hi: Optional[float] = None,
                 lo_open: bool = False, hi_open: bool = False) -> None:
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ConfigError(path, f"must be {'<' if hi_open else '<='} {hi}, got {value}")


def _fields(cls, data: dict, path: str, kinds: Mapping[str, Any]) -> dict:
    """Coerce every present key of ``data`` with its converter from ``kinds``."""
    out = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        raw = data[f.name]
        sub = _join(path, f.name)
        convert = kinds[f.name]
        out[f.name] = None if raw is None and _optional(cls, f.name) else convert(raw, sub)
    return out


def _optional(cls, name: str) -> bool:
    default = next(f.default for f in dataclasses.fields(cls) if f.name == name)
    return default is None


def _parse_material(raw: Any) -> MaterialParams:
    names = [f.name for f in dataclasses.fields(MaterialParams)]
    data = _mapping(raw, "material", names)
    values = _fields(MaterialParams, data, "material", dict.fromkeys(names, _number))
    for name, value in values.items():
        _check_range(value, f"material.{name}", 0.0, lo_open=True)
    try:
        return MaterialParams(**values)
    except DbQubitError as exc:
        raise ConfigError("material", str(exc)) from exc


def _parse_layout(raw: Any) -> DeviceLayout:
    if raw is None:
        raise ConfigError("layout", "required section is missing")
    data = _mapping(raw, "layout", ("sites", "pairs"))
    for key in ("sites", "pairs"):
        if key not in data:
            raise ConfigError(f"layout.{key}", "required field is missing")
    sites = []
    if not isinstance(data["sites"], list):
        raise ConfigError("layout.sites", "expected a list of [x, y] positions")
    for i, site in enumerate(data["sites"]):
        xy = _numbers(site, f"layout.sites[{i}]")
        if len(xy) != 2:
            raise ConfigError(f"layout.sites[{i}]", f"expected [x, y], got {site!r}")
        sites.append(xy)
    pairs = []
    if not isinstance(data["pairs"], list):
        raise ConfigError("layout.pairs", "expected a list of [left, right] site indices")
    for i, pair in enumerate(data["pairs"]):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"layout.pairs[{i}]", f"expected [left, right], got {pair!r}")
        pairs.append(tuple(_integer(v, f"layout.pairs[{i}][{j}]") for j, v in enumerate(pair)))
    if not pairs:
        raise ConfigError("layout.pairs", "at least one pair is required")
    try:
        return DeviceLayout(sites=tuple(sites), pairs=tuple(pairs))
    except DbQubitError as exc:
        raise ConfigError("layout.pairs", str(exc)) from exc


def _parse_well(raw: Any) -> WellSettings:
    kinds = {
        "shape": _text, "width": _number, "calibration": _text, "target_level": _number,
        "anchor_separation": _number, "anchor_splitting": _number, "fit_width": _boolean,
    }
    data = _mapping(raw, "well", kinds)
    values = _fields(WellSettings, data, "well", kinds)
    for name in ("width", "anchor_separation", "anchor_splitting"):
        if name in values:
            _check_range(values[name], f"well.{name}", 0.0, lo_open=True)
    if values.get("target_level") is not None:
        _check_range(values["target_level"], "well.target_level", 0.0, lo_open=True)
    return WellSettings(**values)


def _parse_qubit(raw: Any) -> QubitSettings:
    kinds = {
        "splitting_source": _text, "splitting": _number, "zz_convention": _text, "t_per_qubit": _numbers,
        "e_os": _number, "eta": _number, "u0": _number,
    }
    data = _mapping(raw, "qubit", kinds)
    values = _fields(QubitSettings, data, "qubit", kinds)
    if "splitting" in values:
        _check_range(values["splitting"], "qubit.splitting", 0.0, lo_open=True)
    for i, t in enumerate(values.get("t_per_qubit") or ()):
        _check_range(t, f"qubit.t_per_qubit[{i}]", 0.0, lo_open=True)
    return QubitSettings(**values)


def _parse_pulses(raw: Any) -> PulseSettings:
    data = _mapping(raw, "pulses", ("segments",))
    segments = []
    raw_segments = data.get("segments") or []
    if not isinstance(raw_segments, list):
        raise ConfigError("pulses.segments", "expected a list of segments")
    for i, seg in enumerate(raw_segments):
        path = f"pulses.segments[{i}]"
        kinds = {"duration_fs": _number, "deltav": _numbers, "tunneling": _numbers}
        seg_data = _mapping(seg, path, kinds)
        for key in ("duration_fs", "deltav"):
            if key not in seg_data:
                raise ConfigError(f"{path}.{key}", "required field is missing")
        values = _fields(SegmentSettings, seg_data, path, kinds)
        _check_range(values["duration_fs"], f"{path}.duration_fs", 0.0, lo_open=True)
        segments.append(SegmentSettings(**values))
    return PulseSettings(segments=tuple(segments))


def _parse_noise(raw: Any) -> NoiseSettings:
    data = _mapping(raw, "noise", ("dephasing_rate_hz", "relaxation_rate_hz", "readout_error", "drift", "phonon"))
    values = _fields(
        NoiseSettings, {k: v for k, v in data.items() if k not in ("drift", "phonon")}, "noise",
        {"dephasing_rate_hz": _number, "relaxation_rate_hz": _number, "readout_error": _number},
    )
    for name in ("dephasing_rate_hz", "relaxation_rate_hz"):
        if name in values:
            _check_range(values[name], f"noise.{name}", 0.0)
    if "readout_error" in values:
        _check_range(values["readout_error"], "noise.readout_error", 0.0, 0.5, hi_open=True)

    drift_kinds = {"enabled": _boolean, "eta0": _number, "tau_relax_fs": _number, "qubit": _integer}
    drift_data = _mapping(data.get("drift"), "noise.drift", drift_kinds)
    drift_values = _fields(DriftSettings, drift_data, "noise.drift", drift_kinds)
    if "eta0" in drift_values:
        _check_range(drift_values["eta0"], "noise.drift.eta0", 0.0)
    if "tau_relax_fs" in drift_values:
        _check_range(drift_values["tau_relax_fs"], "noise.drift.tau_relax_fs", 0.0, lo_open=True)
    if "qubit" in drift_values:
        _check_range(drift_values["qubit"], "noise.drift.qubit", 0)

    phonon_kinds = {"phonon_energy": _number, "debye_energy": _number, "envelope_radius": _number}
    phonon_data = _mapping(data.get("phonon"), "noise.phonon", phonon_kinds)
    phonon_values = _fields(PhononSettings, phonon_data, "noise.phonon", phonon_kinds)
    for name, value in phonon_values.items():
        if value is not None:
            _check_range(value, f"noise.phonon.{name}", 0.0, lo_open=True)
    phonon = PhononSettings(**phonon_values)
    if phonon.phonon_energy > phonon.debye_energy:
        raise ConfigError("noise.phonon.phonon_energy", f"must not exceed debye_energy ({phonon.debye_energy})")
    return NoiseSettings(**values, drift=DriftSettings(**drift_values), phonon=phonon)


def _parse_run(raw: Any) -> RunSettings:
    kinds = {
        "seed": _integer, "shots": _integer, "workers": _integer, "s_min": _number, "s_max": _number,
        "s_step": _number, "duration_fs": _number, "samples_per_period": _integer, "init_tilt": _number,
        "time_cap_fs": _number, "plateau_tol": _number, "readout_state": _text, "draws": _integer,
        "cphase_mode": _text, "cphase_tilt": _number,
    }
    data = _mapping(raw, "run", kinds)
    values = _fields(RunSettings, data, "run", kinds)
    if "seed" in values:
        _check_range(values["seed"], "run.seed", 0, 2**64 - 1)
    for name in ("shots", "workers", "draws"):
        if name in values:
            _check_range(values[name], f"run.{name}", 1)
    if "samples_per_period" in values:
        _check_range(values["samples_per_period"], "run.samples_per_period", 8)
    for name in ("s_step", "time_cap_fs", "plateau_tol", "duration_fs", "init_tilt", "cphase_tilt"):
        if values.get(name) is not None:
            _check_range(values[name], f"run.{name}", 0.0, lo_open=True)
    run = RunSettings(**values)
    if run.s_min >= run.s_max:
        raise ConfigError("run.s_min", f"must be below run.s_max ({run.s_max})")
    return run


_SECTIONS = ("material", "layout", "well", "qubit", "pulses", "noise", "run")


def config_from_dict(document: Any) -> SimulationConfig:
    data = _mapping(document, "", _SECTIONS)
    return SimulationConfig(
        layout=_parse_layout(data.get("layout")),
        material=_parse_material(data.get("material")),
        well=_parse_well(data.get("well")),
        qubit=_parse_qubit(data.get("qubit")),
        pulses=_parse_pulses(data.get("pulses")),
        noise=_parse_noise(data.get("noise")),
        run=_parse_run(data.get("run")),
    )


def load_config(text: str) -> SimulationConfig:
    """Parse a YAML configuration document into a fully resolved config.

    Raises:
        ConfigError: On YAML syntax errors, unknown keys, wrong types, out-of-range
            values or missing required fields.

    """
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"invalid YAML: {exc}") from exc
    return config_from_dict(document)


def read_config(path: str | os.PathLike[str], overrides: Iterable[str] = ()) -> SimulationConfig:
    """Load a config file, applying ``key=value`` overrides first."""
    file_path = Path(path)
    if not file_path.is_file():
        raise FileNotFoundError(f"Config not found: {file_path}")
    if not os.access(file_path, os.R_OK):
        raise PermissionError(f"Config is not readable: {file_path}")
    try:
        document = yaml.safe_load(file_path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("", f"invalid YAML in {file_path}: {exc}") from exc
    return config_from_dict(apply_overrides(document or {}, overrides))


def apply_overrides(document: Mapping[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """Return a copy of ``document`` with dotted ``key=value`` assignments applied.

    Values are parsed as YAML scalars or flow collections (``0.19``, ``true``, ``[1, 2]``).
    """
    result = _deep_copy(document)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw_value = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(item, "override key is empty")
        try:
            value = yaml.safe_load(raw_value)
        except yaml.YAMLError as exc:
            raise ConfigError(key, f"cannot parse override value {raw_value!r}") from exc
        node = result
        for depth, part in enumerate(parts[:-1]):
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ConfigError(".".join(parts[: depth + 1]), "cannot override inside a non-mapping value")
            node = child
        node[parts[-1]] = value
    return result


def _deep_copy(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: _deep_copy(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_deep_copy(v) for v in value]
    return value


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value) if f.init}
    return value


def config_to_dict(config: SimulationConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for name in _SECTIONS:
        section = getattr(config, name)
        if name == "layout":
            out[name] = {"sites": [list(s) for s in section.sites], "pairs": [list(p) for p in section.pairs]}
        elif name == "pulses":
            out[name] = {
                "segments": [
                    {k: v for k, v in _plain(seg).items() if v is not None} for seg in section.segments
                ]
            }
        else:
            out[name] = _plain(section)
    return out


def dump_config(config: SimulationConfig) -> str:
    """Serialize a resolved config as YAML; :func:`load_config` reads it back equal."""
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, default_flow_style=None)


