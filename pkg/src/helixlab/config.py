"""Experiment configuration: JSON parsing with defaults and range checks.

A configuration is a JSON object

    {"command": "force", "seed": 0, "output_dir": "out", "parameters": {...}}

Each command declares a schema for ``parameters``.  Validation fills in
defaults, rejects unknown keys and reports the dotted path of the first
offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .errors import ConfigError

__all__ = ["ExperimentConfig", "COMMANDS", "validate", "validate_dict", "canonical"]

REQUIRED = object()


@dataclass(frozen=True)
class Field:
    kind: str  # number, int, bool, str, pair, shape, list, object, object_map, any
    default: Any = REQUIRED
    choices: Optional[tuple] = None
    check: Optional[Callable[[Any], Optional[str]]] = None
    schema: Optional[dict] = None  # for object / list-of-object / object_map values
    item: Optional[str] = None  # element kind for lists
    nullable: bool = False


def positive(v):
    return None if v > 0 else "must be positive"


def nonnegative(v):
    return None if v >= 0 else "must be nonnegative"


def increasing_pair(v):
    return None if v[0] < v[1] else "must be an increasing pair"


def positive_increasing_pair(v):
    if v[0] <= 0:
        return "must have positive entries"
    return increasing_pair(v)


def open_unit(v):
    return None if 0 < v < 1 else "must lie in (0, 1)"


def strictly_increasing_positive(v):
    if any(x <= 0 for x in v):
        return "entries must be positive"
    if any(b <= a for a, b in zip(v, v[1:])):
        return "entries must be strictly increasing"
    return None


def all_positive(v):
    return None if all(x > 0 for x in v) else "entries must be positive"


def grid_shape(v):
    return None if all(x >= 6 for x in v) else "grid sizes must be at least 6"


METRIC = {
    "kind": Field("str", "sphere", choices=("sphere", "flat")),
    "R": Field("number", 1.0, check=positive),
}

BOUNDARY = {
    "type": Field("str", "dirichlet", choices=("dirichlet", "neumann")),
    "value": Field("number", 0.0),
    "reference": Field("str", "none", choices=("none", "helicoid", "catenoid")),
    "pitch": Field("number", 1.0),
    "offset": Field("number", 0.0),
}

HOLE = {
    "sigma": Field("pair", check=increasing_pair),
    "theta": Field("pair", check=increasing_pair),
}

REFERENCE = {
    "kind": Field("str", choices=("helicoid", "catenoid")),
    "pitch": Field("number", 1.0),
    "offset": Field("number", 0.0),
}

SOLVE = {
    "metric": Field("object", {}, schema=METRIC),
    "sigma_range": Field("pair", check=increasing_pair),
    "theta_range": Field("pair", check=increasing_pair),
    "periodic": Field("bool", False),
    "grid": Field("shape", [41, 41], check=grid_shape),
    "boundary": Field("object_map", schema=BOUNDARY),
    "holes": Field("list", [], schema=HOLE),
    "pitch": Field("number", 0.0),
    "tol": Field("number", 1e-10, check=positive),
    "max_iter": Field("int", 50, check=positive),
    "initial": Field("str", "harmonic", choices=("harmonic", "zero")),
    "reference": Field("object", None, schema=REFERENCE, nullable=True),
}

SURFACE = {
    "kind": Field("str", choices=("catenoid", "helicoid")),
    "pitch": Field("number", 1.0),
    "offset": Field("number", 0.0),
}

CURVE = {
    "center": Field("pair", [0.0, 0.0]),
    "radius": Field("number", check=positive),
    "argument": Field("number", None, nullable=True),
}

FLUX = {
    "metric": Field("object", {"kind": "flat"}, schema=METRIC),
    "surface": Field("object", None, schema=SURFACE, nullable=True),
    "solve": Field("object", None, schema=SOLVE, nullable=True),
    "curves": Field("list", schema=CURVE),
    "field": Field("str", "vertical", choices=("vertical", "chiX", "chiY", "chiE")),
    "method": Field("str", "exact", choices=("exact", "complex")),
    "n": Field("int", 0, check=nonnegative),
    "tol": Field("number", 1e-10, check=positive),
}

FORCE = {
    "y": Field("list", item="number", check=strictly_increasing_positive),
    "c": Field("list", item="number", check=all_positive),
    "equilibrium": Field("bool", False),
    "tol": Field("number", 1e-10, check=positive),
    "landscape_points": Field("int", 0, check=nonnegative),
}

FORCE_INTEGRAL = {
    "heights": Field("list", item="number", check=strictly_increasing_positive),
    "masses": Field("list", item="number", check=lambda v: None if all(x >= 0 for x in v)
                    else "entries must be nonnegative"),
    "c0": Field("number", 0.0, check=nonnegative),
    "eps": Field("number", None, check=positive, nullable=True),
}

RESIDUE = {
    "p": Field("pair"),
    "weighted": Field("bool", False),
    "radius": Field("number", None, check=positive, nullable=True),
    "force_integral": Field("object", None, schema=FORCE_INTEGRAL, nullable=True),
}

BARRIER = {
    "kind": Field("str", choices=("green", "H", "g", "limit")),
    "modulus_range": Field("pair", [0.1, 10.0], check=positive_increasing_pair),
    "argument_range": Field("pair", [0.05, 6.0], check=increasing_pair),
    "n": Field("shape", [64, 64], check=lambda v: None if all(x >= 2 for x in v)
                else "sample counts must be at least 2"),
    "t": Field("number", 0.01, check=open_unit),
    "poles": Field("list", [1.0], item="number", check=strictly_increasing_positive),
    "masses": Field("list", [1.0], item="number"),
    "c0": Field("number", 0.0, check=nonnegative),
    "C2": Field("number", 0.0, check=nonnegative),
}

HEIGHT = {
    "surface": Field("str", "catenoid", choices=("catenoid", "solve")),
    "r1": Field("number", math.sqrt(2.0), check=positive),
    "r2": Field("number", 10.0, check=positive),
    "h": Field("number", None, check=positive, nullable=True),
    "phi": Field("number", None, nullable=True),
    "grid": Field("shape", [401, 16], check=grid_shape),
    "tol": Field("number", 1e-10, check=positive),
}

AREA = {
    "surface": Field("str", "helicoid", choices=("helicoid", "zero", "solve")),
    "metric": Field("object", {}, schema=METRIC),
    "sigma_range": Field("pair", [-1.0, 1.0], check=increasing_pair),
    "theta_range": Field("pair", [0.3, 3.0], check=increasing_pair),
    "pitch": Field("number", 1.0),
    "grid": Field("shape", [41, 41], check=grid_shape),
    "a": Field("number"),
    "b": Field("number"),
    "alpha": Field("number"),
    "beta": Field("number"),
}

CENSUS = {
    "k": Field("int", None, check=nonnegative, nullable=True),
    "k_max": Field("int", None, check=nonnegative, nullable=True),
}

SCAN = {
    "N": Field("int", check=positive),
    "n_samples": Field("int", 10_000, check=positive),
    "y_min": Field("number", 1e-3, check=open_unit),
    "ratio_max": Field("number", 1e3, check=lambda v: None if v > 1 else "must exceed 1"),
    "mass_range": Field("pair", [0.1, 10.0], check=positive_increasing_pair),
    "include_boundary": Field("bool", False),
}

COMMANDS = {
    "solve": SOLVE,
    "flux": FLUX,
    "force": FORCE,
    "residue": RESIDUE,
    "barrier": BARRIER,
    "height": HEIGHT,
    "area": AREA,
    "census": CENSUS,
    "scan": SCAN,
}

TOP = {
    "command": Field("str", choices=tuple(COMMANDS)),
    "parameters": Field("any", {}),
    "output_dir": Field("str", "helixlab-out"),
    "seed": Field("int", 0, check=nonnegative),
}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _coerce(field: Field, value, path):
    kind = field.kind
    if value is None:
        if field.nullable:
            return None
        raise ConfigError("must not be null", path)
    if kind == "number":
        if not _is_number(value):
            raise ConfigError("must be a finite number", path)
        value = float(value)
    elif kind == "int":
        if not (_is_number(value) and float(value) == int(value)):
            raise ConfigError("must be an integer", path)
        value = int(value)
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError("must be true or false", path)
    elif kind == "str":
        if not isinstance(value, str):
            raise ConfigError("must be a string", path)
    elif kind == "pair":
        if not (isinstance(value, list) and len(value) == 2 and all(_is_number(v) for v in value)):
            raise ConfigError("must be a list of two numbers", path)
        value = [float(v) for v in value]
    elif kind == "shape":
        if not (isinstance(value, list) and len(value) == 2
                and all(_is_number(v) and float(v) == int(v) for v in value)):
            raise ConfigError("must be a list of two integers", path)
        value = [int(v) for v in value]
    elif kind == "list":
        if not isinstance(value, list):
            raise ConfigError("must be a list", path)
        if field.schema is not None:
            value = [_object(field.schema, v, f"{path}[{k}]") for k, v in enumerate(value)]
        elif field.item == "number":
            for k, v in enumerate(value):
                if not _is_number(v):
                    raise ConfigError("must be a finite number", f"{path}[{k}]")
            value = [float(v) for v in value]
    elif kind == "object":
        value = _object(field.schema, value, path)
    elif kind == "object_map":
        if not isinstance(value, dict):
            raise ConfigError("must be an object", path)
        value = {k: _object(field.schema, v, f"{path}.{k}") for k, v in sorted(value.items())}
    if field.choices is not None and value not in field.choices:
        raise ConfigError(f"must be one of {list(field.choices)}", path)
    if field.check is not None:
        msg = field.check(value)
        if msg:
            raise ConfigError(msg, path)
    return value


def _object(schema, data, path):
    if not isinstance(data, dict):
        raise ConfigError("must be an object", path)
    unknown = sorted(set(data) - set(schema))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError("unknown key", where)
    out = {}
    for name, field in schema.items():
        sub = f"{path}.{name}" if path else name
        if name in data:
            out[name] = _coerce(field, data[name], sub)
        elif field.default is REQUIRED:
            raise ConfigError("missing required field", sub)
        else:
            out[name] = json.loads(json.dumps(field.default))
            if out[name] is not None:
                out[name] = _coerce(field, out[name], sub)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    parameters: dict
    output_dir: str
    seed: int

    def as_dict(self):
        return {"command": self.command, "parameters": self.parameters,
                "output_dir": self.output_dir, "seed": self.seed}


def validate_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    if not data.get("command"):
        raise ConfigError("missing required field", "command")
    top = _object(TOP, data, "")
    params = _object(COMMANDS[top["command"]], top["parameters"], "parameters")
    _cross_checks(top["command"], params)
    return ExperimentConfig(top["command"], params, top["output_dir"], top["seed"])


def _cross_checks(command, p):
    if command == "flux" and (p["surface"] is None) == (p["solve"] is None):
        raise ConfigError("give exactly one of 'surface' and 'solve'", "parameters")
    if command == "force" and len(p["y"]) != len(p["c"]):
        raise ConfigError("must have the same length as parameters.y", "parameters.c")
    if command == "force" and not p["y"]:
        raise ConfigError("needs at least one neck", "parameters.y")
    if command == "height" and p["r2"] <= p["r1"]:
        raise ConfigError("must exceed r1", "parameters.r2")
    if command == "height" and p["surface"] == "solve" and p["h"] is None:
        raise ConfigError("required when surface is 'solve'", "parameters.h")
    if command == "area" and (p["b"] < p["a"] or p["beta"] < p["alpha"]):
        raise ConfigError("slab bounds must satisfy a <= b and alpha <= beta", "parameters")
    if command == "census" and (p["k"] is None) == (p["k_max"] is None):
        raise ConfigError("give exactly one of 'k' and 'k_max'", "parameters")
    if command == "barrier" and p["kind"] == "limit" and len(p["masses"]) != len(p["poles"]):
        raise ConfigError("must have the same length as parameters.poles", "parameters.masses")


def validate(text: str) -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ConfigError
        Malformed JSON (with line and column) or an invalid field (with its path).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return validate_dict(data)


def canonical(config: ExperimentConfig) -> str:
    """Fully defaulted configuration as sorted, indented JSON."""
    return json.dumps(config.as_dict(), sort_keys=True, indent=2) + "\n"
