"""
Configuration Module

Unit-suffixed quantities, flat key=value parameter files and the
NBDS_PARAMS environment fallback.
"""

import os
import re
import logging
from dataclasses import replace
from decimal import Decimal, InvalidOperation
from typing import Dict, Optional, Tuple

from .errors import ConfigError

logger = logging.getLogger(__name__)

PARAMS_ENV_VAR = "NBDS_PARAMS"

# Unit suffix -> power of ten. Scaling goes through Decimal so "0.7nA" parses to
# exactly the float literal 0.7e-9.
CURRENT_UNITS = {"fA": -15, "pA": -12, "nA": -9, "uA": -6, "mA": -3, "A": 0}
TIME_UNITS = {"us": -6, "ms": -3, "s": 0}
VOLTAGE_UNITS = {"mV": -3, "V": 0}
CAPACITANCE_UNITS = {"fF": -15, "pF": -12, "nF": -9, "uF": -6, "F": 0}
GAIN_UNITS = {"uA/V2": -6, "mA/V2": -3, "A/V2": 0}

_QUANTITY_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z/0-9]*)$")

SUBTHRESHOLD_KEYS = ("n_n", "n_p", "V_T", "I_Sn", "I_Sp", "V_DD", "V_b")
STRONG_INVERSION_KEYS = ("k_n", "k_p", "V_th", "V_DD", "V_b")
PARAM_KEYS = tuple(dict.fromkeys(SUBTHRESHOLD_KEYS + STRONG_INVERSION_KEYS))


def scale_decimal(number: str, exponent: int) -> float:
    """Scale a decimal literal by 10**exponent without binary rounding."""
    try:
        return float(Decimal(number).scaleb(exponent))
    except InvalidOperation as exc:
        raise ValueError(f"not a number: {number!r}") from exc


def split_quantity(text: str) -> Tuple[str, str]:
    """Split '0.7nA' into ('0.7', 'nA')."""
    match = _QUANTITY_RE.match(text.strip())
    if not match:
        raise ValueError(f"malformed quantity: {text!r}")
    return match.group(1), match.group(2)


def parse_quantity(text: str, units: Optional[Dict[str, int]] = None) -> float:
    """
    Parse a number with an optional unit suffix into SI.

    Args:
        text: Literal such as "1.2", "26mV" or "100uA/V2"
        units: Accepted suffixes; all known suffixes when omitted

    Returns:
        The value in SI units
    """
    number, suffix = split_quantity(text)
    if not suffix:
        return scale_decimal(number, 0)
    table = units if units is not None else _ALL_UNITS
    if suffix not in table:
        raise ValueError(f"unknown unit '{suffix}' in {text!r}")
    return scale_decimal(number, table[suffix])


_ALL_UNITS: Dict[str, int] = {}
for _table in (CURRENT_UNITS, TIME_UNITS, VOLTAGE_UNITS, CAPACITANCE_UNITS, GAIN_UNITS):
    _ALL_UNITS.update(_table)


def load_params_file(path: str) -> Dict[str, float]:
    """
    Read a flat key=value device parameter file.

    Args:
        path: File to read

    Returns:
        Mapping of device field name to SI value

    Raises:
        ConfigError: On unreadable files, malformed lines or unknown keys
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc}") from exc

    values: Dict[str, float] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown parameter '{key}'")
        try:
            values[key] = parse_quantity(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    logger.info("Loaded %d device parameters from %s", len(values), path)
    return values


def resolve_params_path(flag_value: Optional[str]) -> Optional[str]:
    """Return the --params flag, else $NBDS_PARAMS, else None."""
    if flag_value:
        return flag_value
    return os.environ.get(PARAMS_ENV_VAR) or None


class DeviceOverrides:
    """
    Device parameters supplied by the user on top of the built-in defaults.

    A builtin system carries its own bias voltage (1.2 V for FHN, 1.5 V for
    Lorenz, ...); a parameter file only replaces it when it sets V_b.
    """

    def __init__(self, values: Optional[Dict[str, float]] = None):
        self.values = dict(values or {})

    @classmethod
    def from_sources(cls, flag_value: Optional[str] = None) -> "DeviceOverrides":
        path = resolve_params_path(flag_value)
        if path is None:
            return cls()
        return cls(load_params_file(path))

    def apply(self, device):
        """Return `device` with every applicable override substituted."""
        fields = SUBTHRESHOLD_KEYS if device.regime == "subthreshold" else STRONG_INVERSION_KEYS
        changes = {key: self.values[key] for key in fields if key in self.values}
        if not changes:
            return device
        try:
            return replace(device, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_values(self, **values: float) -> "DeviceOverrides":
        merged = dict(self.values)
        merged.update(values)
        return DeviceOverrides(merged)

    def __bool__(self) -> bool:
        return bool(self.values)
