"""Experiment configuration: one JSON document, schema-checked before any work."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from driftlab.generators import GeneratorConfig, TraceConfig
from driftlab.pipeline import PipelineMode


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def _component(names):
    """A named component: ``"tfidf"`` or ``{"name": "tfidf", "params": {...}}``."""
    return {
        "oneOf": [
            {"type": "string", "enum": list(names)},
            {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "enum": list(names)},
                    "params": {"type": "object"},
                },
                "required": ["name"],
                "additionalProperties": False,
            },
        ]
    }


_DAY = {"type": "integer", "minimum": 0}
_OPEN_FRACTION = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

GENERATOR_SCHEMA = {
    "type": "object",
    "properties": {
        "n_records": {"type": "integer", "minimum": 1},
        "class_ratio": _OPEN_FRACTION,
        "drift_at": {"type": "array", "items": _DAY},
        "vocab_size": {"type": "integer", "minimum": 1},
        "tokens_per_record": {"type": "integer", "minimum": 1},
        "noise": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "subclass_schedule": {
            "type": ["array", "null"],
            "items": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        },
        "subclass_token_share": {"type": "number", "minimum": 0, "maximum": 1},
        "period_days": {"type": "integer", "minimum": 1},
        "days": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

TRACES_SCHEMA = {
    "type": "object",
    "properties": {
        "n_traces": {"type": "integer", "minimum": 1},
        "trace_length_range": {
            "type": "array", "items": {"type": "integer", "minimum": 1},
            "minItems": 2, "maxItems": 2,
        },
        "syscall_alphabet_size": {"type": "integer", "minimum": 2},
        "anomaly_ratio": {"type": "number", "minimum": 0, "maximum": 1},
        "anomaly_burst_length": {"type": "integer", "minimum": 1},
        "anomaly_alphabet_size": {"type": "integer", "minimum": 1},
        "disjoint": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "driftlab experiment",
    "type": "object",
    "properties": {
        "dataset": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "path": {"type": "string", "minLength": 1},
                        "kind": {"enum": ["stream", "traces"]},
                    },
                    "required": ["path"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"generator": GENERATOR_SCHEMA},
                    "required": ["generator"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"traces": TRACES_SCHEMA},
                    "required": ["traces"],
                    "additionalProperties": False,
                },
            ]
        },
        "featurizer": _component(["bow", "tfidf", "hashing"]),
        "learner": _component(["nb", "ht", "arf", "iforest"]),
        "detector": _component(["none", "ddm", "eddm", "adwin"]),
        "mode": {"enum": [m.value for m in PipelineMode] + ["none", "static", "retrain"]},
        "delay_days": {"oneOf": [_DAY, {"type": "array", "items": _DAY, "minItems": 1}]},
        "split_fraction": _OPEN_FRACTION,
        "window_w": {"type": "integer", "minimum": 1},
        "window_days": {"type": ["integer", "null"], "minimum": 1},
        "reservoir_capacity": {"type": "integer", "minimum": 1},
        "resampling": _component(["none", "temporal_under", "temporal_over"]),
        "sweep": {
            "type": "object",
            "properties": {
                "proportions": {
                    "type": "array", "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                },
                "n_gram": {"type": "integer", "minimum": 1},
                "train_fraction": _OPEN_FRACTION,
                "n_estimators": {"type": "integer", "minimum": 1},
                "max_samples": {"type": "integer", "minimum": 2},
                "threshold": {"oneOf": [{"const": "train_max_f1"}, {"type": "number"}]},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
    },
    "required": ["dataset"],
    "additionalProperties": False,
}


def _split_component(value, default):
    if value is None:
        return default, {}
    if isinstance(value, str):
        return value, {}
    return value["name"], dict(value.get("params", {}))


@dataclass
class ExperimentConfig:
    """Validated experiment settings with defaults filled in."""

    dataset: dict
    featurizer: str = "tfidf"
    featurizer_params: dict = field(default_factory=dict)
    learner: str = "arf"
    learner_params: dict = field(default_factory=dict)
    detector: str = "adwin"
    detector_params: dict = field(default_factory=dict)
    mode: PipelineMode = PipelineMode.RETRAIN_EXTRACTOR
    delay_days: list = field(default_factory=lambda: [0])
    delay_is_list: bool = False
    split_fraction: float = 0.25
    window_w: int = 1000
    window_days: Optional[int] = None
    reservoir_capacity: int = 1000
    resampling: str = "none"
    resampling_params: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "runs/out"
    raw: dict = field(default_factory=dict)

    @property
    def is_traces(self):
        return "traces" in self.dataset or self.dataset.get("kind") == "traces"

    def generator_config(self) -> GeneratorConfig:
        params = dict(self.dataset["generator"])
        params.setdefault("seed", self.seed)
        return GeneratorConfig(**params)

    def trace_config(self) -> TraceConfig:
        params = dict(self.dataset["traces"])
        params.setdefault("seed", self.seed)
        return TraceConfig(**params)

    def with_seed(self, seed) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        raw["seed"] = seed
        for kind in ("generator", "traces"):
            if kind in raw["dataset"]:
                raw["dataset"][kind]["seed"] = seed
        return parse_config(raw)

    def to_json(self) -> dict:
        """Canonical form echoed into run summaries (output location left out)."""
        raw = copy.deepcopy(self.raw)
        raw.pop("output_dir", None)
        return raw


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate ``doc`` against :data:`CONFIG_SCHEMA` and build the config."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None

    featurizer, featurizer_params = _split_component(doc.get("featurizer"), "tfidf")
    learner, learner_params = _split_component(doc.get("learner"), "arf")
    detector, detector_params = _split_component(doc.get("detector"), "adwin")
    resampling, resampling_params = _split_component(doc.get("resampling"), "none")
    default_mode = "retrain_extractor" if detector != "none" else "no_detector"
    mode = PipelineMode.parse(doc.get("mode", default_mode))
    delay = doc.get("delay_days", 0)

    cfg = ExperimentConfig(
        dataset=doc["dataset"],
        featurizer=featurizer,
        featurizer_params=featurizer_params,
        learner=learner,
        learner_params=learner_params,
        detector=detector,
        detector_params=detector_params,
        mode=mode,
        delay_days=list(delay) if isinstance(delay, list) else [delay],
        delay_is_list=isinstance(delay, list),
        split_fraction=doc.get("split_fraction", 0.25),
        window_w=doc.get("window_w", 1000),
        window_days=doc.get("window_days"),
        reservoir_capacity=doc.get("reservoir_capacity", 1000),
        resampling=resampling,
        resampling_params=resampling_params,
        sweep=dict(doc.get("sweep", {})),
        seed=doc.get("seed", 0),
        output_dir=doc.get("output_dir", "runs/out"),
        raw=copy.deepcopy(doc),
    )
    _check_consistency(cfg)
    return cfg


def _check_consistency(cfg: ExperimentConfig):
    if cfg.is_traces != (cfg.learner == "iforest"):
        raise ConfigError("trace datasets run with learner 'iforest', and 'iforest' needs a trace dataset")
    if cfg.mode is not PipelineMode.NO_DETECTOR and cfg.detector == "none":
        raise ConfigError(f"mode {cfg.mode.value} needs a detector")
    if cfg.is_traces and cfg.delay_days != [0]:
        raise ConfigError("delay_days does not apply to trace datasets")
    if len(set(cfg.delay_days)) != len(cfg.delay_days):
        raise ConfigError("delay_days lists each delay once")
    try:
        if "generator" in cfg.dataset:
            cfg.generator_config()
        if "traces" in cfg.dataset:
            cfg.trace_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config error at dataset: {exc}") from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)
