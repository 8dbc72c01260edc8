"""Material file loading.

A material file is a JSON object::

    {"label": "...", "model": "drude_hydrodynamic", "A": 0.5, "gamma": 0.1,
     "beta": 0.3, "units": "reduced"}

With ``"units": "si"`` the numbers are read as ``A`` in (rad/s)^2,
``gamma`` in rad/s and ``beta`` in m/s and converted to reduced units.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .material import DrudeHydrodynamic
from .units import OMEGA_UNIT, UNIT_SYSTEMS, velocity_from_si

__all__ = ["MaterialConfigError", "load_material", "parse_material"]

KNOWN_KEYS = ("label", "model", "A", "gamma", "beta", "units")
REQUIRED_KEYS = ("A", "gamma", "beta")
MODELS = ("drude_hydrodynamic",)


class MaterialConfigError(ValueError):
    """Invalid material file; the message names the file, line and field."""


def _line_of(text: str, key: str) -> int:
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, match.start()) + 1 if match else 1


def parse_material(text: str, source: str = "<string>") -> DrudeHydrodynamic:
    def fail(key: str | None, message: str):
        line = _line_of(text, key) if key else 1
        where = f"{source}:{line}" + (f": field '{key}'" if key else "")
        raise MaterialConfigError(f"{where}: {message}")

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MaterialConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        fail(None, "top level must be a JSON object")

    for key in data:
        if key not in KNOWN_KEYS:
            fail(key, f"unknown key (allowed: {', '.join(KNOWN_KEYS)})")
    for key in REQUIRED_KEYS:
        if key not in data:
            fail(None, f"missing required field '{key}'")
    model = data.get("model", "drude_hydrodynamic")
    if model not in MODELS:
        fail("model", f"unsupported model {model!r}")
    units = data.get("units", "reduced")
    if units not in UNIT_SYSTEMS:
        fail("units", f"must be one of {UNIT_SYSTEMS}, got {units!r}")
    label = data.get("label", "")
    if not isinstance(label, str):
        fail("label", "must be a string")

    values = {}
    for key in REQUIRED_KEYS:
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            fail(key, f"must be a finite number, got {value!r}")
        values[key] = float(value)
    if not values["gamma"] > 0:
        fail("gamma", f"must be > 0, got {values['gamma']!r}")
    if values["A"] < 0:
        fail("A", f"must be >= 0, got {values['A']!r}")
    if values["beta"] < 0:
        fail("beta", f"must be >= 0, got {values['beta']!r}")

    if units == "si":
        values = {"A": values["A"] / OMEGA_UNIT**2, "gamma": values["gamma"] / OMEGA_UNIT,
                  "beta": velocity_from_si(values["beta"])}
    return DrudeHydrodynamic(values["A"], values["gamma"], values["beta"], label)


def load_material(path) -> DrudeHydrodynamic:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MaterialConfigError(f"{path}: cannot read material file: {exc.strerror}") from None
    return parse_material(text, str(path))
