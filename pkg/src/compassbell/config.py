"""Experiment configuration: defaults, JSON schema, and loading.

A config document has one section per experiment plus the shared model,
integrator, and dichotomizer sections.  User documents are validated
strictly (unknown keys are errors) and then laid over :data:`DEFAULTS`.
"""
from __future__ import annotations

import copy
import json
import math

import jsonschema

from .errors import ConfigError

TWO_PI = 2.0 * math.pi

DEFAULTS = {
    "model": {"alpha": 0.174, "P": 0.335},
    "integrator": {"method": "rk4", "step": 1e-3, "rel_tol": 1e-10, "abs_tol": 1e-12},
    "dichotomizer": {"delta": 0.3, "t_m": 100.0},
    "seed": 12345,
    "traj": {"x": 0.16, "initial": [0.6, 0.0], "t_end": 100.0, "sample_every": 100},
    "table1": {"x_values": [0.160, 0.170, 0.230, 0.232], "initials": [[0.6, 0.0], [0.6, 1e-3]]},
    "strobe": {"x": 0.16, "initial": [0.6, 0.0], "n_transient": 200, "n_keep": 16},
    "lyap": {
        "x_values": [0.160, 0.170, 0.230, 0.232],
        "initial": [0.6, 0.0],
        "d0": 1e-8,
        "renorm_interval": TWO_PI,
        "transient": 200 * TWO_PI,
        "total": 2000 * TWO_PI,
    },
    "bifurcate": {
        "x_lo": 0.1600,
        "x_hi": 0.2321,
        "n_x": 200,
        "initial": [0.6, 0.0],
        "n_transient": 200,
        "n_keep": 32,
        "cluster_tol": 1e-4,
    },
    "bell_static": {
        "a": 0.160,
        "b": 0.170,
        "a_prime": 0.230,
        "b_prime": 0.232,
        "ensemble": [[0.6, 0.0]],
        "runs": None,
    },
    "bell_drift": {
        "scenario": "table1",
        "offset": None,
        "t_cap": 3200.0,
        "scan_t_max": 1000.0,
        "scan_t_min": 100.0,
        "equal_settings": {"x_a": 0.230, "x_b": 0.232},
    },
    "bell_random": {
        "corrections": "none",
        "menu": {"a": 0.160, "a_prime": 0.230, "b": 0.170, "b_prime": 0.232},
        "angles": {"a": 0.0, "a_prime": math.pi / 4, "b": math.pi / 8, "b_prime": 3 * math.pi / 8},
        "n_pairs": 4000,
        "lambda_L": [[0.6, 0.0]],
    },
    "synth_cos": {
        "x_lo": 0.2290,
        "x_hi": 0.2293,
        "grid": [0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8],
        "lambda_L": None,
        "epsilon": 1e-3,
        "resolution": 1e-5,
        "component": "theta_dot",
        "t_m_cap": 1600.0,
    },
    "sep_cos": {
        "grid": [0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8],
        "N": 8,
        "epsilon": 1e-3,
        "omega": [0.5, 2.0],
    },
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 0}
_poscount = {"type": "integer", "minimum": 1}
_state = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_states = {"type": "array", "items": _state, "minItems": 1}
_angles = {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": math.pi / 2}, "minItems": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_run = _obj(
    {
        "ensemble": _states,
        "corrections_I": {"anyOf": [_states, {"type": "null"}]},
        "corrections_II": {"anyOf": [_states, {"type": "null"}]},
    },
    required=["ensemble"],
)
_menu = _obj({"a": _num, "a_prime": _num, "b": _num, "b_prime": _num})

CONFIG_SCHEMA = _obj(
    {
        "model": _obj({"alpha": _nonneg, "P": _nonneg}),
        "integrator": _obj(
            {"method": {"enum": ["rk4", "adaptive"]}, "step": _pos, "rel_tol": _pos, "abs_tol": _pos}
        ),
        "dichotomizer": _obj({"delta": _pos, "t_m": _pos}),
        "seed": {"type": "integer", "minimum": 0},
        "traj": _obj({"x": _nonneg, "initial": _state, "t_end": _pos, "sample_every": _poscount}),
        "table1": _obj({"x_values": {"type": "array", "items": _nonneg, "minItems": 1}, "initials": _states}),
        "strobe": _obj({"x": _nonneg, "initial": _state, "n_transient": _count, "n_keep": _poscount}),
        "lyap": _obj(
            {
                "x_values": {"type": "array", "items": _nonneg, "minItems": 1},
                "initial": _state,
                "d0": _pos,
                "renorm_interval": _pos,
                "transient": _pos,
                "total": _pos,
            }
        ),
        "bifurcate": _obj(
            {
                "x_lo": _nonneg,
                "x_hi": _nonneg,
                "n_x": {"type": "integer", "minimum": 2},
                "initial": _state,
                "n_transient": _count,
                "n_keep": _poscount,
                "cluster_tol": _pos,
            }
        ),
        "bell_static": _obj(
            {
                "a": _nonneg,
                "b": _nonneg,
                "a_prime": _nonneg,
                "b_prime": _nonneg,
                "ensemble": _states,
                "runs": {"anyOf": [{"type": "array", "items": _run, "minItems": 4, "maxItems": 4}, {"type": "null"}]},
            }
        ),
        "bell_drift": _obj(
            {
                "scenario": {"enum": ["table1", "weak", "equal_settings"]},
                "offset": {"anyOf": [_num, {"type": "null"}]},
                "t_cap": _pos,
                "scan_t_max": _pos,
                "scan_t_min": _nonneg,
                "equal_settings": _obj({"x_a": _nonneg, "x_b": _nonneg}),
            }
        ),
        "bell_random": _obj(
            {
                "corrections": {"enum": ["none", "synthesized"]},
                "menu": _menu,
                "angles": _menu,
                "n_pairs": _poscount,
                "lambda_L": _states,
            }
        ),
        "synth_cos": _obj(
            {
                "x_lo": _nonneg,
                "x_hi": _nonneg,
                "grid": _angles,
                "lambda_L": {"anyOf": [_states, {"type": "null"}]},
                "epsilon": _pos,
                "resolution": _pos,
                "component": {"enum": ["theta_dot", "theta"]},
                "t_m_cap": {"anyOf": [_pos, {"type": "null"}]},
            }
        ),
        "sep_cos": _obj(
            {
                "grid": _angles,
                "N": _poscount,
                "epsilon": _pos,
                "omega": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
            }
        ),
    }
)

COMMANDS = ("traj", "table1", "strobe", "lyap", "bifurcate", "bell-static", "bell-drift",
            "bell-random", "synth-cos", "sep-cos")

RESULT_SCHEMA = _obj(
    {
        "command": {"enum": list(COMMANDS)},
        "config": CONFIG_SCHEMA,
        "result": {"type": "object"},
    },
    required=["command", "config", "result"],
)


def validate(doc: dict, schema: dict = CONFIG_SCHEMA) -> None:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve(doc: dict | None) -> dict:
    """Validate a user document and fill in defaults."""
    doc = doc or {}
    validate(doc)
    cfg = _merge(DEFAULTS, doc)
    validate(cfg)
    return cfg


def load(path: str | None) -> dict:
    """Read a JSON config; ``None`` or ``"default"`` gives the built-in defaults."""
    if path in (None, "default"):
        return resolve({})
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return resolve(doc)
