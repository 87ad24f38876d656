"""Run configuration: a versioned JSON document with strictly checked keys.

Unknown keys anywhere in the document are a hard error, so typos cannot be
silently ignored.  All quantities are in normalized units (the field
frequency difference is the energy unit) unless a ``physical`` block is
present, in which case laboratory quantities are converted first and the
manifest records both forms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError, ValidationError
from .model import (
    ModelParams,
    PhysicalRealization,
    SemiclassicalParams,
    realize,
)
from .dynamics import PulseSchedule

SCHEMA_VERSION = 1

_BLOCK_KEYS: dict[str, set[str]] = {
    "model": {"delta", "delta_m", "delta_c", "n_max"},
    "schedule": {"g_max", "omega_max", "t_int", "tau", "t_start", "t_end"},
    "surfaces": {"g_range", "omega_range", "resolution", "display_offset"},
    "intersections": {"plane", "field_max", "scan_points"},
    "scan": {"g_range", "omega_range", "resolution", "target_n", "plateau_level"},
    "design": {"target_n", "t_int", "tau"},
    "oracle": {"omega_m", "theta_0", "steps_per_period"},
    "propagate": {"sampling", "rtol", "atol"},
    "physical": {
        "dipole",
        "mode_volume",
        "maser_amplitude",
        "velocity",
        "waist_c",
        "waist_m",
        "d",
        "omega_m",
        "omega_c",
        "omega_0",
    },
}
_TOP_KEYS = {"schema_version", *_BLOCK_KEYS}


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply ``--set dotted.path=value`` overrides; values parse as JSON with
    a plain-string fallback."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return config


def _check_keys(config: dict) -> None:
    unknown = sorted(set(config) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {', '.join(unknown)}")
    for block, allowed in _BLOCK_KEYS.items():
        if block not in config:
            continue
        if not isinstance(config[block], dict):
            raise ConfigError(f"config block {block!r} must be an object")
        bad = sorted(set(config[block]) - allowed)
        if bad:
            raise ConfigError(f"unknown keys in {block!r}: {', '.join(bad)}")


def _require(config: dict, block: str) -> dict:
    if block not in config:
        raise ConfigError(f"command requires a {block!r} config block")
    return config[block]


def _number(block: dict, block_name: str, key: str, default=None, required=True):
    if key not in block or block[key] is None:
        if required and default is None:
            raise ConfigError(f"{block_name}.{key} is required")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{block_name}.{key} must be a number, got {value!r}")
    return float(value)


def _integer(block: dict, block_name: str, key: str, default=None, required=True):
    if key not in block or block[key] is None:
        if required and default is None:
            raise ConfigError(f"{block_name}.{key} is required")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{block_name}.{key} must be an integer, got {value!r}")
    return value


def _pair(block: dict, block_name: str, key: str) -> tuple[float, float]:
    value = block.get(key)
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"{block_name}.{key} must be a two-number array")
    return float(value[0]), float(value[1])


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration: the typed blocks a command needs, plus the
    raw document (for hashing into the manifest)."""

    raw: dict
    model: ModelParams
    schedule: PulseSchedule | None
    physical_summary: dict | None


def validate_config(config: dict, need_schedule: bool = False) -> RunConfig:
    """Check the schema version, reject unknown keys, and build the typed
    parameter blocks, converting a ``physical`` block to normalized units
    first when present."""
    _check_keys(config)
    version = config.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )

    physical_summary = None
    if "physical" in config:
        model_block = _require(config, "model")
        n_max = _integer(model_block, "model", "n_max", default=7, required=False)
        params, schedule, physical_summary = _from_physical(config["physical"], n_max)
        return RunConfig(
            raw=config, model=params, schedule=schedule, physical_summary=physical_summary
        )

    model_block = _require(config, "model")
    try:
        params = ModelParams(
            delta=_number(model_block, "model", "delta"),
            delta_m=_number(model_block, "model", "delta_m"),
            delta_c=_number(model_block, "model", "delta_c", required=False),
            n_max=_integer(model_block, "model", "n_max", default=7, required=False),
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid model block: {exc}")

    schedule = None
    if "schedule" in config or need_schedule:
        block = _require(config, "schedule")
        try:
            schedule = PulseSchedule(
                g_max=_number(block, "schedule", "g_max", default=0.0, required=False),
                omega_max=_number(block, "schedule", "omega_max", default=0.0, required=False),
                t_int=_number(block, "schedule", "t_int"),
                tau=_number(block, "schedule", "tau", default=0.0, required=False),
                t_start=_number(block, "schedule", "t_start", required=False),
                t_end=_number(block, "schedule", "t_end", required=False),
            )
        except ValidationError as exc:
            raise ConfigError(f"invalid schedule block: {exc}")
    return RunConfig(raw=config, model=params, schedule=schedule, physical_summary=physical_summary)


def _from_physical(block: dict, n_max: int):
    """Convert laboratory quantities to the normalized model and schedule."""
    name = "physical"
    try:
        phys = PhysicalRealization(
            dipole=_number(block, name, "dipole"),
            mode_volume=_number(block, name, "mode_volume"),
            maser_amplitude=_number(block, name, "maser_amplitude"),
            velocity=_number(block, name, "velocity"),
            waist_c=_number(block, name, "waist_c"),
            waist_m=_number(block, name, "waist_m"),
            d=_number(block, name, "d"),
        )
        frequencies = SemiclassicalParams(
            omega_m=_number(block, name, "omega_m"),
            omega_c=_number(block, name, "omega_c"),
            omega_0=_number(block, name, "omega_0"),
        )
        pulses = realize(phys, frequencies)
        delta_lab = frequencies.omega_c - frequencies.omega_m
        if delta_lab <= 0:
            raise ValidationError("omega_c must exceed omega_m")
        params = ModelParams(
            delta=1.0,
            delta_m=(frequencies.omega_0 - frequencies.omega_m) / delta_lab,
            n_max=n_max,
        )
        schedule = PulseSchedule(
            g_max=pulses.g_max / delta_lab,
            omega_max=pulses.omega_max / delta_lab,
            t_int=pulses.t_int * delta_lab,
            tau=pulses.tau * delta_lab,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid physical block: {exc}")
    summary = {
        "lab": {
            "g_max_rad_per_s": pulses.g_max,
            "omega_max_rad_per_s": pulses.omega_max,
            "t_int_s": pulses.t_int,
            "tau_s": pulses.tau,
            "delta_rad_per_s": delta_lab,
        },
        "normalized": {
            "g_max": schedule.g_max,
            "omega_max": schedule.omega_max,
            "t_int": schedule.t_int,
            "tau": schedule.tau,
            "delta_m": params.delta_m,
        },
    }
    return params, schedule, summary


def block_value(config: dict, block: str, key: str, kind: str, default: Any = None, required: bool = True):
    """Typed accessor used by the command handlers."""
    data = _require(config, block) if required and block not in config else config.get(block, {})
    if kind == "number":
        return _number(data, block, key, default=default, required=required)
    if kind == "integer":
        return _integer(data, block, key, default=default, required=required)
    if kind == "pair":
        if key not in data:
            if default is not None:
                return default
            raise ConfigError(f"{block}.{key} is required")
        return _pair(data, block, key)
    if kind == "string":
        value = data.get(key, default)
        if required and value is None:
            raise ConfigError(f"{block}.{key} is required")
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{block}.{key} must be a string")
        return value
    if kind == "bool":
        value = data.get(key, default)
        if value is not None and not isinstance(value, bool):
            raise ConfigError(f"{block}.{key} must be a boolean")
        return value
    raise ValueError(f"unknown accessor kind {kind!r}")
