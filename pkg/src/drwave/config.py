"""
JSON experiment configuration, schema version ``v1``.

Unknown keys are rejected at every level so a mistyped parameter cannot be
silently ignored. Omitted keys take the :class:`~drwave.rate_lab.ExperimentSpec`
defaults; :func:`dump_config` writes every key, so a dumped config parses back
to the same spec.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .errors import ConfigurationError
from .estimators import DENSITY_MODES, KINDS, SCHEMES
from .rate_lab import TUNING_RULES, ExperimentSpec

__all__ = ["SCHEMA_VERSION", "CONFIG_SCHEMA", "parse_config", "load_config", "dump_config"]

SCHEMA_VERSION = "v1"

_number = {"type": "number"}
_opt_number = {"type": ["number", "null"]}
_pair = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "drwave experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2},
        "replications": {"type": "integer", "minimum": 100},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "slope_tolerance": {"type": "number", "exclusiveMinimum": 0},
        "dgp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["worst_case", "constant"]},
                "alpha": _opt_number,
                "beta": _opt_number,
                "d": {"type": "integer", "minimum": 1},
                "epsilon": _number,
                "levels": {"type": "integer", "minimum": 0},
                "offset": _number,
                "p0": _opt_number,
                "b0": _opt_number,
                "rho": {"type": "number", "minimum": 0},
                "idio": {"type": "number", "minimum": 0},
                "bounds": _pair,
            },
        },
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(KINDS)},
                "scheme": {"enum": list(SCHEMES)},
                "cross_fit": {"type": "boolean"},
                "density_mode": {"enum": list(DENSITY_MODES)},
                "swap_roles": {"type": "boolean"},
                "density_gamma": _opt_number,
                "density_c": {"type": "number", "exclusiveMinimum": 0},
                "density_bounds": _pair,
            },
        },
        "tuning": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rule": {"enum": list(TUNING_RULES)},
                "k1": {"type": ["integer", "null"], "minimum": 1},
                "k2": {"type": ["integer", "null"], "minimum": 1},
                "c1": {"type": "number", "exclusiveMinimum": 0},
                "c2": {"type": "number", "exclusiveMinimum": 0},
                "kmax_side": {"enum": ["k1", "k2"]},
                "alpha": _opt_number,
                "beta": _opt_number,
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(CONFIG_SCHEMA)


def parse_config(raw: dict) -> ExperimentSpec:
    """Validate a decoded config against the schema and build the spec.

    Raises
    ------
    ConfigurationError
        Listing every schema violation, or the first semantic one.
    """
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigurationError("config does not match schema v1:\n" + "\n".join(lines))
    body = {k: v for k, v in raw.items() if k != "schema_version"}
    return ExperimentSpec.from_dict(body)


def load_config(path: str | Path) -> ExperimentSpec:
    """Read and parse a JSON config file.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ConfigurationError
        For invalid JSON or schema violations.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


def dump_config(spec: ExperimentSpec) -> str:
    """Full JSON text of ``spec``, every key explicit."""
    return json.dumps({"schema_version": SCHEMA_VERSION, **spec.to_dict()}, indent=2) + "\n"
