"""Minimal unit handling for configuration values and tensor tags."""

from __future__ import annotations

import re

import numpy as np

# factors to a base unit per dimension
_STRESS = {"Pa": 1e-6, "kPa": 1e-3, "MPa": 1.0, "N/mm^2": 1.0, "GPa": 1e3, "kN/cm^2": 10.0}
_LENGTH = {"m": 1e2, "cm": 1.0, "mm": 0.1, "um": 1e-4}
_TEMPERATURE = {"degC": 1.0, "C": 1.0, "K": 1.0}  # differences only; offsets handled by caller
_CONDUCTIVITY = {"W/(cm*K)": 1.0, "W/(m*K)": 1e-2}
_EXPANSION = {"1/K": 1.0}
_ANGLE = {"deg": 1.0, "rad": 57.29577951308232}
_HEAT_FLUX = {"W/cm^2": 1.0, "W/m^2": 1e-4}
_ENERGY = {"kN*cm": 1.0, "J": 0.1, "N*m": 0.1, "N*mm": 1e-4}
_DIMENSIONLESS = {"": 1.0, "1": 1.0, "-": 1.0}

TABLES = {
    "stress": _STRESS,
    "length": _LENGTH,
    "temperature": _TEMPERATURE,
    "conductivity": _CONDUCTIVITY,
    "expansion": _EXPANSION,
    "angle": _ANGLE,
    "heat_flux": _HEAT_FLUX,
    "energy": _ENERGY,
    "dimensionless": _DIMENSIONLESS,
}


class UnitError(ValueError):
    pass


def dimension_of(unit: str) -> str:
    for dim, table in TABLES.items():
        if unit in table:
            return dim
    raise UnitError(f"unknown unit {unit!r}")


def convert(value, unit: str, target: str):
    d1, d2 = dimension_of(unit), dimension_of(target)
    if d1 != d2:
        raise UnitError(f"cannot convert {unit!r} ({d1}) to {target!r} ({d2})")
    t = TABLES[d1]
    if isinstance(value, (list, tuple)):
        value = np.asarray(value, dtype=float)
    return value * (t[unit] / t[target])


_QTY = re.compile(r"^\s*([-+0-9.eE]+)\s*(.*?)\s*$")


def parse_quantity(q, dimension: str, target: str):
    """Parse ``"210 GPa"``, ``[210, "GPa"]`` or ``{"value":..,"unit":..}`` into ``target`` units.

    Bare numbers are rejected unless the dimension is dimensionless.
    """
    if isinstance(q, dict):
        value, unit = q["value"], q.get("unit", "")
    elif isinstance(q, (list, tuple)) and len(q) == 2 and isinstance(q[1], str):
        value, unit = q
    elif isinstance(q, str):
        m = _QTY.match(q)
        if not m:
            raise UnitError(f"cannot parse quantity {q!r}")
        value, unit = float(m.group(1)), m.group(2)
    elif isinstance(q, (int, float)) and dimension == "dimensionless":
        return float(q)
    else:
        raise UnitError(f"quantity {q!r} needs an explicit {dimension} unit")
    if dimension_of(unit) != dimension:
        raise UnitError(f"{q!r}: expected a {dimension} unit, got {unit!r}")
    return convert(value, unit, target)
