"""Experiment configuration: one JSON document, schema-checked up front.

Every section is optional; missing keys take the defaults below.  Unknown
keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .datasynth import DatasetSpec, ring_spec
from .dpp import DppHyperparams, SimilarityConfig
from .errors import ConfigError
from .gan import TrainConfig
from .quality import QualityFunctionSpec, SurrogateConfig, default_benchmark

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}
_int = {"type": "integer"}
_vec = {"type": "array", "items": _num, "minItems": 1}
_box = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj(
    {
        "seed": _int,
        "output_dir": {"type": "string"},
        "dataset": _obj(
            {
                "modes": {
                    "type": "array",
                    "minItems": 1,
                    "items": _obj({"center": _vec, "std": _pos, "weight": _pos}, ["center", "std"]),
                },
                "n_samples": {"type": "integer", "minimum": 0},
                "domain": _box,
                "seed": _int,
            }
        ),
        "quality": _obj(
            {
                "domain": _box,
                "objectives": {
                    "type": "array",
                    "minItems": 1,
                    "items": _obj(
                        {
                            "bumps": {
                                "type": "array",
                                "items": _obj(
                                    {
                                        "center": _vec,
                                        "amplitude": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                                        "sigma": _pos,
                                    },
                                    ["center", "amplitude", "sigma"],
                                ),
                            }
                        },
                        ["bumps"],
                    ),
                },
            },
            ["objectives"],
        ),
        "train": _obj(
            {
                "batch_size": _posint,
                "steps": {"type": "integer", "minimum": 0},
                "d_z": _posint,
                "lr_g": _pos,
                "lr_d": _pos,
                "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "d_steps": _posint,
                "quality_source": {"enum": ["analytic", "surrogate"]},
                "hidden": {"type": "array", "items": _posint, "minItems": 1},
                "log_every": _posint,
            }
        ),
        "similarity": _obj({"bandwidth": _pos}),
        "dpp": _obj({"gamma0": _nonneg, "gamma1": _nonneg}),
        "surrogate": _obj(
            {
                "n_samples": _posint,
                "epochs": _posint,
                "batch_size": _posint,
                "lr": _pos,
                "lr_final": _pos,
                "holdout": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "seed": _int,
            }
        ),
        "evaluation": _obj(
            {
                "n_repetitions": _posint,
                "subset_size": _posint,
                "pool_size": _posint,
                "novelty_threshold": _nonneg,
                "top_k": _posint,
                "compare_seeds": {"type": "array", "items": _int, "minItems": 1},
                "eigen_method": {"enum": ["jacobi", "lapack"]},
            }
        ),
    }
)


@dataclass
class EvaluationConfig:
    n_repetitions: int = 1000
    subset_size: int = 100
    pool_size: int = 1000
    novelty_threshold: float = 0.1
    top_k: int = 5
    compare_seeds: tuple[int, ...] = (0, 1, 2)
    eigen_method: str = "lapack"


@dataclass
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/default"
    dataset: DatasetSpec = field(default_factory=ring_spec)
    quality: QualityFunctionSpec = field(default_factory=default_benchmark)
    train: TrainConfig = field(default_factory=TrainConfig)
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    dpp: DppHyperparams = field(default_factory=DppHyperparams)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    surrogate_samples: int = 2000
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def train_config(self, seed: int | None = None, gamma1: float | None = None) -> TrainConfig:
        """TrainConfig with the DPP/similarity sections folded in."""
        t = copy.copy(self.train)
        t.gamma0 = self.dpp.gamma0
        t.gamma1 = self.dpp.gamma1 if gamma1 is None else gamma1
        t.bandwidth = self.similarity.bandwidth
        t.seed = self.seed if seed is None else seed
        return t

    def with_seed(self, seed: int) -> "ExperimentConfig":
        out = copy.copy(self)
        out.seed = seed
        return out

    def to_dict(self) -> dict:
        t = self.train
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "dataset": self.dataset.to_dict(),
            "quality": self.quality.to_dict(),
            "train": {
                "batch_size": t.batch_size,
                "steps": t.steps,
                "d_z": t.d_z,
                "lr_g": t.lr_g,
                "lr_d": t.lr_d,
                "beta1": t.beta1,
                "d_steps": t.d_steps,
                "quality_source": t.quality_source,
                "hidden": list(t.hidden),
                "log_every": t.log_every,
            },
            "similarity": {"bandwidth": self.similarity.bandwidth},
            "dpp": {"gamma0": self.dpp.gamma0, "gamma1": self.dpp.gamma1},
            "surrogate": {
                "n_samples": self.surrogate_samples,
                "epochs": self.surrogate.epochs,
                "batch_size": self.surrogate.batch_size,
                "lr": self.surrogate.lr,
                "lr_final": self.surrogate.lr_final,
                "holdout": self.surrogate.holdout,
                "seed": self.surrogate.seed,
            },
            "evaluation": {
                "n_repetitions": self.evaluation.n_repetitions,
                "subset_size": self.evaluation.subset_size,
                "pool_size": self.evaluation.pool_size,
                "novelty_threshold": self.evaluation.novelty_threshold,
                "top_k": self.evaluation.top_k,
                "compare_seeds": list(self.evaluation.compare_seeds),
                "eigen_method": self.evaluation.eigen_method,
            },
        }


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    cfg = ExperimentConfig()
    try:
        if "seed" in doc:
            cfg.seed = doc["seed"]
        if "output_dir" in doc:
            cfg.output_dir = doc["output_dir"]
        if "dataset" in doc:
            merged = {**cfg.dataset.to_dict(), **doc["dataset"]}
            cfg.dataset = DatasetSpec.from_dict(merged)
        if "quality" in doc:
            cfg.quality = QualityFunctionSpec.from_dict(doc["quality"])
        if "train" in doc:
            cfg.train = TrainConfig(**doc["train"])
        if "similarity" in doc:
            cfg.similarity = SimilarityConfig(**doc["similarity"])
        if "dpp" in doc:
            cfg.dpp = DppHyperparams(**{**cfg.to_dict()["dpp"], **doc["dpp"]})
        if "surrogate" in doc:
            s = dict(doc["surrogate"])
            cfg.surrogate_samples = s.pop("n_samples", cfg.surrogate_samples)
            cfg.surrogate = SurrogateConfig(**s)
        if "evaluation" in doc:
            e = dict(doc["evaluation"])
            if "compare_seeds" in e:
                e["compare_seeds"] = tuple(e["compare_seeds"])
            cfg.evaluation = EvaluationConfig(**e)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.evaluation.subset_size > cfg.evaluation.pool_size:
        raise ConfigError("evaluation/subset_size exceeds evaluation/pool_size")
    dims = {len(m.center) for m in cfg.dataset.modes} | {cfg.quality.dim}
    if len(dims) != 1:
        raise ConfigError("dataset and quality function disagree on design dimension")
    return cfg


def load_config(path=None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(doc)
