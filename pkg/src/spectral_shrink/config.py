"""JSON experiment configuration: schema, validation and parsing."""

from __future__ import annotations

import json
from pathlib import Path

from jsonschema import Draft202012Validator

from .errors import ConfigError, ShrinkError
from .montecarlo import Assertion, ExperimentConfig, ModelKind, RuleSpec, SpikedModelSpec
from .shrinkage import LossSpec
from .spike_maps import Framework

__all__ = ["CONFIG_SCHEMA", "load_config", "parse_config"]

_NUM = {"type": "number"}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "points"],
    "properties": {
        "name": {"type": "string"},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "n"],
            "properties": {
                "kind": {"enum": [k.value for k in ModelKind]},
                "n": {"type": "integer", "minimum": 1},
                "p": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "replicates": {"type": "integer", "minimum": 1},
                "rotate": {"type": "boolean"},
                "bilateral": {"type": "boolean"},
            },
        },
        "framework": {"type": "string", "pattern": "^(dzero|dinf|wigner|prop:.+)$"},
        "spike_scale": {"enum": ["raw", "hat", "bar", "tau", "theta"]},
        "points": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _NUM}},
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["identity", "rank_aware", "optimal", "threshold", "agnostic"]},
                    "norm": {"enum": ["F", "O", "N"]},
                    "threshold": _NUM,
                },
            },
        },
        "losses": {"type": "array", "items": {"type": "string", "pattern": "^[FON][1-5]$"}},
        "rank": {"type": ["integer", "null"], "minimum": 0},
        "operator_epsilon": {"type": "number", "exclusiveMinimum": 0},
        "operator_bulk_edge": {"type": "boolean"},
        "assertions": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["range", "dominance", "improvement"]},
                    "point": {"type": "integer", "minimum": 0},
                    "metric": {"enum": ["loss", "eigenvalue", "left_c2", "right_c2"]},
                    "index": {"type": "integer", "minimum": 0},
                    "rule": {"type": "string"},
                    "baseline": {"type": "string"},
                    "loss": {"type": "string"},
                    "lo": _NUM,
                    "hi": _NUM,
                    "sigmas": _NUM,
                    "label": {"type": "string"},
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


def _schema_problems(doc) -> list[str]:
    out = []
    for err in sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        out.append(f"{where}: {err.message}")
    return out


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document; all problems are reported together."""
    problems = _schema_problems(doc)
    if problems:
        raise ConfigError(problems)
    m = doc["model"]
    kind = ModelKind(m["kind"])
    if kind is ModelKind.SPIKED_COVARIANCE:
        if "p" not in m:
            problems.append("model: covariance models need 'p'")
        if "m" in m:
            problems.append("model: 'm' applies to signal_plus_noise only")
        second = m.get("p", 1)
    elif kind is ModelKind.SIGNAL_PLUS_NOISE:
        if "m" not in m:
            problems.append("model: signal_plus_noise needs 'm'")
        if "p" in m:
            problems.append("model: 'p' applies to spiked_covariance only")
        second = m.get("m", 1)
    else:
        if "p" in m or "m" in m:
            problems.append("model: spiked_wigner takes only 'n'")
        second = m["n"]

    framework = None
    if "framework" in doc:
        try:
            framework = Framework.parse(doc["framework"])
        except ShrinkError as exc:
            problems.append(f"framework: {exc}")
    elif kind is ModelKind.SPIKED_WIGNER:
        framework = Framework.wigner()

    default_scale = {"spiked_covariance": "raw", "signal_plus_noise": "tau", "spiked_wigner": "theta"}[kind.value]
    rules = []
    for i, r in enumerate(doc.get("rules", [])):
        try:
            rules.append(RuleSpec(r["kind"], r.get("norm"), r.get("threshold")))
        except ShrinkError as exc:
            problems.append(f"rules/{i}: {exc}")
    losses = [LossSpec.parse(s) for s in doc.get("losses", [])]
    assertions = [Assertion(**a) for a in doc.get("assertions", [])]
    npts = len(doc["points"])
    rule_labels = {r.label() for r in rules}
    loss_labels = {l.label() for l in losses}
    for i, a in enumerate(assertions):
        if a.point >= npts:
            problems.append(f"assertions/{i}: point {a.point} out of range")
        needs_loss = a.kind != "range" or a.metric == "loss"
        if needs_loss:
            for key, val, pool in (("rule", a.rule, rule_labels), ("loss", a.loss, loss_labels)):
                if val not in pool:
                    problems.append(f"assertions/{i}: {key} {val!r} is not configured")
            if a.kind != "range" and a.baseline not in rule_labels:
                problems.append(f"assertions/{i}: baseline {a.baseline!r} is not configured")
    # build even when problems are known so that every error is reported at once
    cfg = None
    try:
        model = SpikedModelSpec(
            kind, m["n"], second, (), m.get("seed", 0), m.get("replicates", 1),
            m.get("rotate", False), m.get("bilateral", False),
        )
        cfg = ExperimentConfig(
            model=model,
            points=tuple(tuple(float(x) for x in p) for p in doc["points"]),
            spike_scale=doc.get("spike_scale", default_scale),
            framework=framework,
            rules=tuple(rules),
            losses=tuple(losses),
            rank=doc.get("rank"),
            operator_epsilon=doc.get("operator_epsilon", 0.1),
            operator_bulk_edge=doc.get("operator_bulk_edge", False),
            assertions=tuple(assertions),
            name=doc.get("name", "experiment"),
        )
    except ConfigError as exc:
        problems.extend(exc.problems)
    except ShrinkError as exc:
        problems.append(str(exc))
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path) -> tuple[ExperimentConfig, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    return parse_config(doc), doc
