"""JSON wire formats: components, mixtures, configs, reports, manifests.

Configs are schema-validated before execution (unknown fields rejected), and
every emitted file goes through one canonical serializer so identical runs
produce byte-identical output.
"""

from __future__ import annotations

import hashlib
import json

import jsonschema

from .components import component_from_dict
from .errors import ConfigError
from .mixture import Mixture

COMPONENT_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "mean", "stddev"],
            "properties": {
                "kind": {"const": "gaussian"},
                "mean": {"type": "number"},
                "stddev": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "location", "scale"],
            "properties": {
                "kind": {"enum": ["laplace", "cauchy"]},
                "location": {"type": "number"},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "p"],
            "properties": {
                "kind": {"const": "pmf"},
                "p": {"type": "array", "minItems": 1, "items": {"type": "number"}},
            },
        },
    ]
}

MIXTURE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["basis", "w"],
    "properties": {
        "basis": {"type": "array", "minItems": 2, "items": COMPONENT_SCHEMA},
        "w": {"type": "array", "minItems": 2, "items": {"type": "number"}},
    },
}

_SEED = {"type": "integer", "minimum": 0}
_SAMPLES = {"type": "integer", "minimum": 2}

CONFIG_SCHEMAS = {
    "estimate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["p", "q", "generators"],
        "properties": {
            "p": MIXTURE_SCHEMA,
            "q": MIXTURE_SCHEMA,
            "generators": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "string"},
            },
            "samples": _SAMPLES,
            "seed": _SEED,
        },
    },
    "verify": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "mode": {"enum": ["categorical", "gmm"]},
            "samples": _SAMPLES,
            "seed": _SEED,
            "alphas": {"type": "array", "items": {"type": "number"}},
            "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            # test hook: perturb the second eta to prove the suite can fail
            "corrupt_eta": {"type": "number"},
        },
    },
    "aggregate": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "truth": MIXTURE_SCHEMA,
            "basis_mode": {"enum": ["pmf", "gmm"]},
            "n": {"type": "integer", "minimum": 1},
            "shards": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "eval_samples": _SAMPLES,
        },
    },
    "cluster": {
        "type": "object",
        "additionalProperties": False,
        "required": ["basis", "weights", "k"],
        "properties": {
            "basis": {"type": "array", "minItems": 2, "items": COMPONENT_SCHEMA},
            "weights": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "minItems": 2, "items": {"type": "number"}},
            },
            "k": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "samples": _SAMPLES,
            "max_iter": {"type": "integer", "minimum": 1},
        },
    },
    "bounds": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "instances": {"type": "integer", "minimum": 1},
            "seed": _SEED,
            "generators": {"type": "array", "items": {"type": "string"}},
        },
    },
    "plot-potential": {
        "type": "object",
        "additionalProperties": False,
        "required": ["basis"],
        "properties": {
            "basis": {"type": "array", "minItems": 2, "maxItems": 2, "items": COMPONENT_SCHEMA},
            "grid_points": {"type": "integer", "minimum": 3},
            "eta_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "eta_max": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "samples": _SAMPLES,
            "seed": _SEED,
            "figure": {"type": "boolean"},
        },
    },
}

REPORT_SCHEMAS = {
    "estimate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "results"],
        "properties": {
            "command": {"const": "estimate"},
            "results": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["generator", "value", "stderr", "s", "seed", "ci95"],
                    "properties": {
                        "generator": {"type": "string"},
                        "value": {"type": "number"},
                        "stderr": {"type": "number"},
                        "s": {"type": "integer"},
                        "seed": {"type": ["integer", "null"]},
                        "ci95": {"type": "array", "items": {"type": "number"}},
                        "rejected": {"type": "integer"},
                        "divergence_risk": {"type": "boolean"},
                    },
                },
            },
        },
    },
    "verify": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "mode", "checks", "all_pass"],
        "properties": {
            "command": {"const": "verify"},
            "mode": {"type": "string"},
            "all_pass": {"type": "boolean"},
            "checks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["name", "lhs", "rhs", "slack", "pass"],
                    "properties": {
                        "name": {"type": "string"},
                        "lhs": {"type": "number"},
                        "rhs": {"type": "number"},
                        "slack": {"type": "number"},
                        "pass": {"type": "boolean"},
                    },
                },
            },
        },
    },
    "aggregate": {
        "type": "object",
        "additionalProperties": False,
        "required": [
            "command", "local_etas", "aggregate_eta", "global_eta",
            "kl_to_truth", "shard_sizes", "seed",
        ],
        "properties": {
            "command": {"const": "aggregate"},
            "local_etas": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}},
            },
            "aggregate_eta": {"type": "array", "items": {"type": "number"}},
            "global_eta": {"type": "array", "items": {"type": "number"}},
            "kl_to_truth": {
                "type": "object",
                "additionalProperties": False,
                "required": ["aggregate", "global"],
                "properties": {
                    "aggregate": {"type": "object"},
                    "global": {"type": "object"},
                },
            },
            "shard_sizes": {"type": "array", "items": {"type": "integer"}},
            "seed": {"type": "integer"},
        },
    },
    "cluster": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "assignments", "centroids", "objective_trace", "iterations"],
        "properties": {
            "command": {"const": "cluster"},
            "assignments": {"type": "array", "items": {"type": "integer"}},
            "centroids": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}},
            },
            "objective_trace": {"type": "array", "items": {"type": "number"}},
            "iterations": {"type": "integer"},
        },
    },
    "bounds": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "inequalities", "all_hold"],
        "properties": {
            "command": {"const": "bounds"},
            "all_hold": {"type": "boolean"},
            "inequalities": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["name", "lhs", "rhs", "slack", "holds", "instances", "violations"],
                    "properties": {
                        "name": {"type": "string"},
                        "lhs": {"type": "number"},
                        "rhs": {"type": "number"},
                        "slack": {"type": "number"},
                        "holds": {"type": "boolean"},
                        "instances": {"type": "integer"},
                        "violations": {"type": "integer"},
                    },
                },
            },
        },
    },
}


def validate_config(command: str, cfg: dict) -> dict:
    if command not in CONFIG_SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from exc
    return cfg


def validate_report(command: str, report: dict) -> dict:
    schema = REPORT_SCHEMAS.get(command)
    if schema is not None:
        jsonschema.validate(report, schema)
    return report


def mixture_from_dict(d: dict) -> Mixture:
    from .components import ComponentBasis

    basis = ComponentBasis(tuple(component_from_dict(c) for c in d["basis"]))
    return Mixture(basis, d["w"])


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed separators, newline-terminated."""
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()
