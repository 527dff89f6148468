"""Sectioned ``key = value`` configuration files with exact key lists."""

import configparser
import math

from .errors import ParseError

REQUIRED = object()


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _float(text):
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


CONVERTERS = {"float": _float, "int": int, "str": str.strip, "bool": _bool, "floats": _floats}

SIMULATION_SCHEMA = {
    "model": {
        "gamma": ("float", REQUIRED),
        "delta": ("float", 0.0),
        "a1": ("float", 1.0),
        "a2": ("float", 0.0),
        "ratio_index": ("str", "auto"),
        "profile": ("str", ""),
    },
    "grid": {
        "n_cells": ("int", 1024),
        "r_max": ("float", REQUIRED),
    },
    "run": {
        "frame": ("str", "selfsim"),
        "cfl": ("float", 0.5),
        "viscous": ("bool", True),
        "duration": ("float", REQUIRED),
        "max_density_factor": ("float", math.inf),
        "min_dt": ("float", 1e-12),
        "boundary": ("str", ""),
        "dissipation": ("float", 0.0),
        "output_every": ("int", 10),
    },
    "initial": {
        "blowup_time": ("float", 0.1),
        "nu1": ("float", 1e-4),
        "c0": ("float", 10.0),
        "r0": ("float", 1.0),
        "eta": ("float", 0.5),
        "perturbation_amplitude": ("float", 0.0),
        "perturbation_center": ("float", 0.5),
        "perturbation_width": ("float", 0.15),
    },
    "diagnostics": {
        "k_surrogate": ("int", 1),
        "probes": ("floats", ()),
    },
    "checks": {
        "max_drift": ("float", math.nan),
        "slope_tolerance": ("float", math.nan),
        "fdis_tolerance": ("float", math.nan),
        "expect_reason": ("str", ""),
    },
    "output": {
        "diagnostics": ("str", "diagnostics.csv"),
        "report": ("str", "report.json"),
    },
}

SWEEP_SCHEMA = {
    "sweep": {
        "gammas": ("floats", REQUIRED),
        "deltas": ("floats", REQUIRED),
        "lambda": ("float", math.nan),
        "ratio_index": ("str", "5"),
        "a1": ("float", 1e-12),
        "n_cells": ("int", 512),
        "r_max": ("float", 4.0),
        "duration": ("float", 0.5),
        "blowup_time": ("float", 0.1),
    },
}


def parse_config(text, schema, source="<config>"):
    """Parse and validate; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"{source}: {exc.message if hasattr(exc, 'message') else exc}",
                         line) from exc
    out = {}
    for section in cp.sections():
        if section not in schema:
            raise ParseError(f"{source}: unknown section [{section}]")
    for section, keys in schema.items():
        values = {}
        present = cp[section] if cp.has_section(section) else {}
        for key in present:
            if key not in keys:
                raise ParseError(f"{source}: unknown key '{key}' in [{section}]")
        for key, (kind, default) in keys.items():
            if key in present:
                raw = present[key]
                try:
                    values[key] = CONVERTERS[kind](raw)
                except ValueError as exc:
                    raise ParseError(f"{source}: bad value for '{key}' in [{section}]: "
                                     f"{exc}") from exc
            elif default is REQUIRED:
                raise ParseError(f"{source}: missing required key '{key}' in [{section}]")
            else:
                values[key] = default
        out[section] = values
    return out


def read_config(path, schema):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text, schema, source=str(path)), text
