"""Run configuration: strict TOML with unit-suffixed physical quantities.

Physical values are strings such as ``"15 per_um"``, ``"1.85 um"``,
``"-20 fs"`` or ``"pi/2 rad"``. They are converted to canonical units on
parse (um, per_um, um2, rad, and atomic units for time, energy and momentum);
serialization writes the canonical form, so parse -> serialize -> parse is
stable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from .fields import AU_TIME_FS, HARTREE_EV

COMMANDS = ("mask", "diffract", "mpi", "field", "topology", "tomo", "reproduce")
FIGURES = ("fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b", "figA1", "figA2")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# dimension -> (canonical unit, {accepted unit: converter to canonical})
def _ev_to_momentum(e):
    if e < 0:
        raise ValueError("kinetic energy must be non-negative")
    return math.sqrt(2.0 * e / HARTREE_EV)


DIMENSIONS = {
    "length": ("um", {"um": float}),
    "inv_length": ("per_um", {"per_um": float}),
    "area": ("um2", {"um2": float}),
    "angle": ("rad", {"rad": float, "deg": math.radians}),
    "time": ("au", {"au": float, "fs": lambda t: t / AU_TIME_FS}),
    "energy": ("au", {"au": float, "eV": lambda e: e / HARTREE_EV}),
    "momentum": ("au", {"au": float, "eV": _ev_to_momentum}),
}

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QTY = re.compile(rf"^\s*(?P<num>{_NUM})?\s*(?P<pi>\*?\s*pi)?\s*(?:/\s*(?P<den>{_NUM}))?"
                  r"\s+(?P<unit>[A-Za-z_0-9]+)\s*$")


def parse_quantity(text, dimension):
    """``"<number>[*pi][/<number>] <unit>"`` -> float in canonical units."""
    canonical, units = DIMENSIONS[dimension]
    m = _QTY.match(text)
    if not m or (m.group("num") is None and m.group("pi") is None):
        raise ValueError(f"cannot parse quantity {text!r}")
    value = float(m.group("num")) if m.group("num") is not None else 1.0
    if m.group("pi"):
        value *= math.pi
    if m.group("den"):
        value /= float(m.group("den"))
    unit = m.group("unit")
    if unit not in units:
        raise ValueError(f"unit {unit!r} not allowed here (expected one of "
                         f"{', '.join(sorted(units))})")
    return units[unit](value)


# key kinds: "int", "float", "bool", "str" or ("q", dimension)
SCHEMA = {
    "": {"command": "str", "seed": "int", "threads": "int"},
    "output": {"dir": "str", "pgm": "bool", "contours": "bool"},
    "grid": {"n": "int", "extent": ("q", "length"), "pad": "bool"},
    "mask": {"m": "int", "n": "int", "kappa_spm": ("q", "angle"), "k0": ("q", "inv_length"),
             "R": ("q", "length"), "threshold": "float", "binarize": "bool",
             "sideband": "int"},
    "mask.radial": {"C": ("q", "area"), "C2": ("q", "area")},
    "diffraction": {"window_fraction": "float", "log_scale": "bool"},
    "mpi": {"m": "int", "n": "int", "omega": ("q", "energy"), "phi_r": ("q", "angle"),
            "phi_b": ("q", "angle"), "phi_ce": ("q", "angle"), "zeta": ("q", "angle"),
            "tau": ("q", "time"), "envelope_fwhm": ("q", "time"),
            "amplitude_ratio": "float", "k_center": ("q", "momentum"),
            "k_sigma": ("q", "momentum")},
    "mpi.grid": {"n": "int", "extent": ("q", "momentum")},
    "field": {"duration": ("q", "time"), "samples": "int"},
    "topology": {"m": "int", "n": "int", "beta_min": "float", "beta_max": "float",
                 "count": "int", "contour_radius": "float"},
    "tomo": {"n": "int", "extent": ("q", "momentum"), "angles": "int",
             "step": ("q", "angle"), "phantom": "str", "ball_radius": ("q", "momentum")},
    "reproduce": {"figure": "str"},
}

CHOICES = {("", "command"): COMMANDS, ("reproduce", "figure"): FIGURES,
           ("tomo", "phantom"): ("pmd", "ball", "blobs")}


@dataclass
class RunConfig:
    """Validated configuration; ``sections`` maps dotted section names to
    ``{key: value}`` with quantities already in canonical units."""

    command: str
    seed: int = 0
    sections: dict = field(default_factory=dict)

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def section(self, name):
        return dict(self.sections.get(name, {}))

    def normalized(self):
        """Plain nested dict of the validated content (used for equality)."""
        return {"command": self.command, "seed": self.seed,
                "sections": {k: dict(sorted(v.items())) for k, v in sorted(self.sections.items())}}


def _check_value(kind, value, where, errors):
    if isinstance(kind, tuple):
        if isinstance(value, bool) or isinstance(value, (int, float)):
            errors.append(f"{where}: physical quantity needs a unit, e.g. \"{value} "
                          f"{DIMENSIONS[kind[1]][0]}\"")
            return None
        if not isinstance(value, str):
            errors.append(f"{where}: expected a quantity string")
            return None
        try:
            return parse_quantity(value, kind[1])
        except ValueError as exc:
            errors.append(f"{where}: {exc}")
            return None
    if kind == "bool":
        if not isinstance(value, bool):
            errors.append(f"{where}: expected true/false")
            return None
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{where}: expected an integer")
            return None
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{where}: expected a number")
            return None
        if not math.isfinite(value):
            errors.append(f"{where}: must be finite")
            return None
        return float(value)
    if not isinstance(value, str):
        errors.append(f"{where}: expected a string")
        return None
    return value


def _walk(table, prefix, out, errors):
    for key, value in table.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            if name not in SCHEMA:
                errors.append(f"unknown section [{name}]")
                continue
            out.setdefault(name, {})
            _walk(value, name, out, errors)
            continue
        allowed = SCHEMA.get(prefix)
        if allowed is None or key not in allowed:
            where = f"[{prefix}] " if prefix else ""
            errors.append(f"{where}unknown key {key!r}")
            continue
        checked = _check_value(allowed[key], value, name, errors)
        if checked is None:
            continue
        choices = CHOICES.get((prefix, key))
        if choices and checked not in choices:
            errors.append(f"{name}: {checked!r} is not one of {', '.join(choices)}")
            continue
        out.setdefault(prefix, {})[key] = checked


def from_dict(data) -> RunConfig:
    errors = []
    sections = {}
    _walk(data, "", sections, errors)
    top = sections.pop("", {})
    if "command" not in top and not any("command" in e for e in errors):
        errors.append("missing required key 'command'")
    if errors:
        raise ConfigError(errors)
    sections = {k: v for k, v in sections.items() if v}
    threads = top.get("threads")
    if threads is not None:
        sections.setdefault("run", {})["threads"] = threads
    return RunConfig(top["command"], top.get("seed", 0), sections)


def parse_config_text(text) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax: {exc}"]) from None
    return from_dict(data)


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    return parse_config_text(path.read_text(encoding="utf-8"))


def to_dict(cfg: RunConfig):
    out = {"command": cfg.command, "seed": cfg.seed}
    threads = cfg.sections.get("run", {}).get("threads")
    if threads is not None:
        out["threads"] = threads
    for name, values in sorted(cfg.sections.items()):
        if name == "run":
            continue
        schema = SCHEMA[name]
        node = out
        for part in name.split("."):
            node = node.setdefault(part, {})
        for key, value in sorted(values.items()):
            kind = schema[key]
            if isinstance(kind, tuple):
                node[key] = f"{value!r} {DIMENSIONS[kind[1]][0]}"
            else:
                node[key] = value
    return out


def serialize(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))
