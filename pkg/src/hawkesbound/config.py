"""Experiment configuration: a single JSON document validated against :data:`SCHEMA`.

Precedence, lowest first: built-in :data:`DEFAULTS`, the config file, then
command-line flags (``--seed``, ``--threads``, ``--out``, ``--svg``).
Unknown fields are rejected at every level.
"""

import copy
import json

import jsonschema

from hawkesbound.model import HawkesModel
from hawkesbound.verify import PiecewiseFn

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}

_kernel = {
    "type": "object",
    "required": ["family"],
    "additionalProperties": False,
    "properties": {
        "family": {"enum": ["null", "exponential", "uniform", "pareto"]},
        "a": {"type": "number", "minimum": 0},
        "rate": _positive,
        "width": _positive,
        "x_min": _positive,
        "shape": {"type": "number", "exclusiveMinimum": 1},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hawkesbound experiment",
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["mu", "kernels"],
            "additionalProperties": False,
            "properties": {
                "m": {"type": "integer", "minimum": 1},
                "mu": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
                "kernels": {"type": "array", "items": {"type": "array", "items": _kernel}},
            },
        },
        "window": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        "burn_in": {"oneOf": [_positive, {"type": "null"}]},
        "burn_in_eps": _positive,
        "n_probe": {"type": "integer", "minimum": 1},
        "n_reps": {"type": "integer", "minimum": 1},
        "u_grid": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "xi_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "f": {
            "type": "object",
            "required": ["breakpoints", "values"],
            "additionalProperties": False,
            "properties": {
                "breakpoints": {"type": "array", "items": _number, "minItems": 2},
                "values": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            },
        },
        "t_period": _positive,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "engine": {"enum": ["cluster", "thinning"]},
        "threads": {"type": "integer", "minimum": 1},
        "ci_level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "certificate": {
            "type": "object",
            "required": ["policy"],
            "additionalProperties": False,
            "properties": {
                "policy": {"enum": ["optimize", "fixed"]},
                "r": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "n_cap": {"type": "integer", "minimum": 1},
            },
            "if": {"properties": {"policy": {"const": "fixed"}}},
            "then": {"required": ["r"]},
        },
        "max_nodes": {"type": "integer", "minimum": 1},
        "rate_cap": _positive,
        "gw": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "root_type": {"type": "integer", "minimum": 1},
                "n_trees": {"type": "integer", "minimum": 1},
                "t_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "n_gens": {"type": "integer", "minimum": 0},
            },
        },
        "out": {"type": "string"},
        "svg": {"type": "boolean"},
    },
}

DEFAULTS = {
    "window": [0.0, 1.0],
    "burn_in": None,
    "burn_in_eps": 1e-3,
    "n_probe": 100_000,
    "n_reps": 100_000,
    "u_grid": [0.25, 0.5, 0.75, 1.0],
    "seed": 0,
    "engine": "cluster",
    "threads": 1,
    "ci_level": 0.99,
    "certificate": {"policy": "optimize"},
    "max_nodes": 1_000_000,
    "rate_cap": 1e6,
    "gw": {"root_type": 1, "n_trees": 10_000, "t_grid": [0.0, 0.05, 0.1], "n_gens": 50},
    "out": ".",
    "svg": False,
}


class ConfigError(ValueError):
    pass


def validate(cfg):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    mu, kernels = cfg["model"]["mu"], cfg["model"]["kernels"]
    if len(kernels) != len(mu) or any(len(row) != len(mu) for row in kernels):
        raise ConfigError(f"kernel table must be {len(mu)}x{len(mu)} to match mu")
    if cfg["model"].get("m", len(mu)) != len(mu):
        raise ConfigError("model.m disagrees with the length of mu")
    if "f" in cfg and "t_period" not in cfg:
        raise ConfigError("f needs t_period")
    a, b = cfg.get("window", DEFAULTS["window"])
    if not a < b:
        raise ConfigError("window must satisfy a < b")


def load(path=None, overrides=None):
    """Read, validate and merge a config with defaults and ``overrides`` (flags set to None are ignored)."""
    cfg = {}
    if path is not None:
        with open(path) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    validate(cfg)
    merged = copy.deepcopy(DEFAULTS)
    for key, value in cfg.items():
        if key == "gw":
            merged["gw"].update(value)
        else:
            merged[key] = value
    return merged


def resolved(cfg):
    """The config as it should be written back for an exact replay."""
    return {k: v for k, v in cfg.items() if k not in ("out", "svg", "threads")}


def build_model(cfg, check=True):
    return HawkesModel.from_dict(cfg["model"], check=check)


def build_f(cfg):
    if "f" not in cfg:
        return None
    return PiecewiseFn(cfg["f"]["breakpoints"], cfg["f"]["values"])
