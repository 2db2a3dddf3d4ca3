"""Flat ``key = value`` configuration files with unit-suffixed numbers.

Values are plain numbers or numbers with an SI unit suffix such as
``116mA``, ``1042nm``, ``3.8e-5`` or ``10kHz``; each key declares which
unit class it accepts and everything is converted to base SI on read.
Unknown keys are hard errors so a misspelled physics parameter can
never default silently.
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import ConfigError
from .model import AbsorberParams, DiodeLaserParams

__all__ = [
    "parse_quantity",
    "parse_config_text",
    "load_laser_params",
    "load_absorber",
    "laser_params_to_config",
    "absorber_to_config",
]

_SI_PREFIXES = {
    "f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3,
    "": 1.0, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12,
}

# unit class -> base symbol
_UNIT_CLASSES = {
    "length": "m",
    "current": "A",
    "power": "W",
    "frequency": "Hz",
    "time": "s",
    "area": "m2",
    "inverse_length": "1/m",
    "inverse_volume": "1/m3",
    "rate_density": "1/m3s",
    "rate": "1/s",
    "dimensionless": "",
}

_NUMBER_RE = re.compile(
    r"^(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(?P<unit>\S*)$"
)


def _unit_factor(unit: str, unit_class: str) -> float:
    """Multiplier converting ``unit`` to the base unit of its class."""
    base = _UNIT_CLASSES[unit_class]
    if unit == "" or unit == base:
        return 1.0
    if unit_class in ("length", "current", "power", "frequency", "time"):
        if unit.endswith(base) and len(unit) == len(base) + 1:
            prefix = unit[0]
            if prefix in _SI_PREFIXES:
                return _SI_PREFIXES[prefix]
    if unit_class == "area" and unit in ("m^2", "m²"):
        return 1.0
    if unit_class == "inverse_length" and unit in ("m-1", "m^-1", "/m"):
        return 1.0
    if unit_class == "inverse_volume" and unit in ("m-3", "m^-3", "/m3", "1/m^3"):
        return 1.0
    if unit_class == "rate_density" and unit in ("1/m3/s", "1/(m3s)", "1/(m^3s)", "m-3s-1"):
        return 1.0
    if unit_class == "rate" and unit in ("s-1", "/s", "1/s", "Hz"):
        return 1.0
    raise ConfigError(
        f"unit {unit!r} is not valid for a {unit_class} quantity "
        f"(base unit {base!r})"
    )


def parse_quantity(text: str, unit_class: str = "dimensionless") -> float:
    """Parse a number with an optional unit suffix into base SI."""
    if unit_class not in _UNIT_CLASSES:
        raise ConfigError(f"unknown unit class {unit_class!r}")
    match = _NUMBER_RE.match(text.strip())
    if match is None:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value = float(match.group("num"))
    return value * _unit_factor(match.group("unit"), unit_class)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Read ``key = value`` lines; '#' starts a comment; keys are unique."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


# laser parameter file schema: key -> unit class
LASER_KEYS = {
    "wavelength": "length",
    "group_index": "dimensionless",
    "confinement": "dimensionless",
    "internal_loss": "inverse_length",
    "fca_cross_section": "area",
    "active_thickness": "length",
    "active_width": "length",
    "active_length": "length",
    "cavity_length": "length",
    "petermann_k": "dimensionless",
    "internal_efficiency": "dimensionless",
    "differential_gain": "area",
    "transparency_density": "inverse_volume",
    "recomb_at_threshold": "rate_density",
    "recomb_slope": "rate",
    "spont_at_threshold": "rate_density",
    "spont_slope": "rate",
    "reflectivity_front": "dimensionless",
    "reflectivity_rear": "dimensionless",
    "spont_background": "power",
}
OPTIONAL_LASER_KEYS = {"anchor_density": "inverse_volume"}

ABSORBER_KEYS = {
    "delta_alpha": "inverse_length",
    "absorber_length": "length",
}
OPTIONAL_ABSORBER_KEYS = {"single_pass_depth": "dimensionless"}


def _load_schema(entries: dict[str, str], required: dict[str, str],
                 optional: dict[str, str], source: str) -> dict[str, float]:
    unknown = sorted(set(entries) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{source}: unknown keys: {', '.join(unknown)}")
    missing = sorted(set(required) - set(entries))
    if missing:
        raise ConfigError(f"{source}: missing keys: {', '.join(missing)}")
    values: dict[str, float] = {}
    for key, raw in entries.items():
        unit_class = required.get(key) or optional[key]
        try:
            values[key] = parse_quantity(raw, unit_class)
        except ConfigError as exc:
            raise ConfigError(f"{source}: key {key!r}: {exc}") from exc
    return values


def load_laser_params(path: str | Path) -> DiodeLaserParams:
    """Read a laser parameter file into a validated parameter set."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc}") from exc
    entries = parse_config_text(text, source=str(path))
    values = _load_schema(entries, LASER_KEYS, OPTIONAL_LASER_KEYS, str(path))
    return DiodeLaserParams(**values)


def load_absorber(path: str | Path) -> AbsorberParams:
    """Read an absorber file into validated absorber parameters."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read absorber file {path}: {exc}") from exc
    entries = parse_config_text(text, source=str(path))
    values = _load_schema(entries, ABSORBER_KEYS, OPTIONAL_ABSORBER_KEYS, str(path))
    return AbsorberParams(**values)


def laser_params_to_config(params: DiodeLaserParams) -> dict[str, float]:
    """Resolved laser parameters as a flat mapping (base SI units)."""
    out = {key: getattr(params, key) for key in LASER_KEYS}
    out["anchor_density"] = params.anchor_density
    return out


def absorber_to_config(absorber: AbsorberParams) -> dict[str, float]:
    return {
        "delta_alpha": absorber.delta_alpha,
        "absorber_length": absorber.absorber_length,
        "single_pass_depth": absorber.single_pass_depth,
    }
