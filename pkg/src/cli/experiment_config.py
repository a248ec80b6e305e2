"""
Experiment Configuration

A flat JSON object with dotted keys. Defaults below are overridden by a
config file, then by command-line values. Every violation is collected
and reported at once. The resolved flat config is written into each
output directory so any artifact can be traced back to it.
"""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src.data.perspectrum_processor import DEFAULT_LABEL_MAP, IngestConfig
from src.data.records import Split, StanceLabel
from src.encoder.encoder_service import EncoderSettings
from src.interpret.segmentation import SegmenterMode
from src.model.stance_model import Variant
from src.training.train_config import TrainConfig
from src.utils.errors import ConfigValidationError
from src.utils.io_utils import write_json

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
ENCODER_DIR_ENV = "STANCY_ENCODER_DIR"

# key -> (default, accepted types, nullable)
SCHEMA: Dict[str, Tuple[Any, Tuple[type, ...], bool]] = {
    "seed": (42, (int,), False),
    "data.path": (None, (str,), True),
    "data.raw_dir": (None, (str,), True),
    "data.claims_file": ("perspectrum_with_answers_v1.0.json", (str,), False),
    "data.pool_file": ("perspective_pool_v1.0.json", (str,), False),
    "data.split_file": ("dataset_split_v1.0.json", (str,), False),
    "data.stance_key": ("stance_label_3", (str,), False),
    "data.label_map": (dict(DEFAULT_LABEL_MAP), (dict,), False),
    "encoder.name": ("pretrained", (str,), False),
    "encoder.path": (None, (str,), True),
    "encoder.max_sequence_length": (512, (int,), False),
    "encoder.toy.layers": (2, (int,), False),
    "encoder.toy.hidden_size": (32, (int,), False),
    "encoder.toy.attention_heads": (2, (int,), False),
    "train.variant": ("CONS", (str,), False),
    "train.learning_rate": (3e-5, (int, float), False),
    "train.batch_size": (32, (int,), False),
    "train.epochs": (3, (int,), False),
    "train.optimizer": ("adam", (str,), False),
    "train.grid.learning_rate": (None, (list,), True),
    "train.grid.batch_size": (None, (list,), True),
    "train.grad_clip_norm": (1.0, (int, float), True),
    "train.linear_warmup": (False, (bool,), False),
    "train.warmup_ratio": (0.1, (int, float), False),
    "train.num_workers": (0, (int,), False),
    "train.eval_batch_size": (64, (int,), False),
    "train.device": ("auto", (str,), False),
    "loss.cos_weight": (1.0, (int, float), False),
    "loss.detach_cosine_feature": (False, (bool,), False),
    "lstm.embeddings_path": (None, (str,), True),
    "lstm.embedding_dim": (300, (int,), False),
    "lstm.hidden_size": (128, (int,), False),
    "lstm.dense_size": (256, (int,), False),
    "eval.split": ("test", (str,), False),
    "output.dir": (None, (str,), True),
    "interpret.mode": ("unigram", (str,), False),
    "interpret.top_k": (25, (int,), False),
    "interpret.min_occurrences": (2, (int,), False),
    "interpret.chunker": (None, (str,), True),
    "interpret.max_workers": (1, (int,), False),
}


def default_values() -> Dict[str, Any]:
    return {key: json.loads(json.dumps(spec[0])) for key, spec in SCHEMA.items()}


def parse_override(assignment: str) -> Tuple[str, Any]:
    """Parse "key=value"; the value is read as JSON when possible."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigValidationError([f"override {assignment!r} is not of the form key=value"])
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _check_value(key: str, value: Any) -> Optional[str]:
    if key not in SCHEMA:
        return f"unknown key {key!r}"
    _, types, nullable = SCHEMA[key]
    expected = "/".join(t.__name__ for t in types)
    if value is None:
        return None if nullable else f"{key} must not be null"
    if isinstance(value, bool) and bool not in types:
        return f"{key} must be {expected}, got bool"
    if not isinstance(value, types):
        return f"{key} must be {expected}, got {type(value).__name__}"
    if key.startswith("train.grid.") and (
            not value or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                 for x in value)):
        return f"{key} must be a non-empty list of numbers"
    return None


def _accept(overrides: Dict[str, Any]) -> Tuple[Dict[str, Any], List[str]]:
    """Split overrides into well-typed values and violation messages."""
    accepted, violations = {}, []
    for key, value in overrides.items():
        problem = _check_value(key, value)
        if problem:
            violations.append(problem)
        else:
            accepted[key] = value
    return accepted, violations


@dataclass
class ExperimentConfig:
    """Resolved experiment settings plus the flat values they came from."""

    values: Dict[str, Any]
    seed: int
    ingest: IngestConfig
    encoder: EncoderSettings
    train: TrainConfig
    eval_split: Split
    interpret_mode: SegmenterMode
    data_path: Optional[str] = None
    raw_dir: Optional[str] = None
    output_dir: Optional[str] = None
    top_k: int = 25
    min_occurrences: int = 2
    chunker: Optional[str] = None
    max_workers: int = 1

    @classmethod
    def from_flat(cls, overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """
        Merge overrides onto the defaults and validate.

        Raises:
            ConfigValidationError: listing every violation
        """
        values = default_values()
        accepted, violations = _accept(overrides or {})
        values.update(accepted)
        if values["encoder.path"] is None and os.getenv(ENCODER_DIR_ENV):
            values["encoder.path"] = os.getenv(ENCODER_DIR_ENV)

        v = values
        try:
            variant = Variant(str(v["train.variant"]).upper())
        except ValueError:
            violations.append(f"train.variant must be BASE, CONS or LSTM_BASELINE, got {v['train.variant']!r}")
            variant = Variant.CONS
        try:
            eval_split = Split(str(v["eval.split"]).lower())
        except ValueError:
            violations.append(f"eval.split must be train, dev or test, got {v['eval.split']!r}")
            eval_split = Split.TEST
        try:
            mode = SegmenterMode(str(v["interpret.mode"]).lower())
        except ValueError:
            violations.append(f"interpret.mode must be unigram or chunk, got {v['interpret.mode']!r}")
            mode = SegmenterMode.UNIGRAM
        for sub_label, target in v["data.label_map"].items():
            if target not in {l.value for l in StanceLabel}:
                violations.append(f"data.label_map[{sub_label!r}] must be SUPPORT or OPPOSE")

        encoder = EncoderSettings(
            name=v["encoder.name"],
            path=v["encoder.path"],
            max_sequence_length=v["encoder.max_sequence_length"],
            toy_layers=v["encoder.toy.layers"],
            toy_hidden_size=v["encoder.toy.hidden_size"],
            toy_attention_heads=v["encoder.toy.attention_heads"],
        )
        violations.extend(encoder.validate())
        train = TrainConfig(
            variant=variant,
            learning_rate=float(v["train.learning_rate"]),
            batch_size=v["train.batch_size"],
            epochs=v["train.epochs"],
            seed=v["seed"],
            optimizer=v["train.optimizer"],
            grid_learning_rates=v["train.grid.learning_rate"],
            grid_batch_sizes=v["train.grid.batch_size"],
            grad_clip_norm=v["train.grad_clip_norm"],
            linear_warmup=v["train.linear_warmup"],
            warmup_ratio=float(v["train.warmup_ratio"]),
            cos_weight=float(v["loss.cos_weight"]),
            detach_cosine_feature=v["loss.detach_cosine_feature"],
            num_workers=v["train.num_workers"],
            eval_batch_size=v["train.eval_batch_size"],
            device=v["train.device"],
            embeddings_path=v["lstm.embeddings_path"],
            embedding_dim=v["lstm.embedding_dim"],
            lstm_hidden_size=v["lstm.hidden_size"],
            dense_size=v["lstm.dense_size"],
        )
        violations.extend(train.validate())
        if v["interpret.top_k"] < 0:
            violations.append("interpret.top_k must be >= 0")
        if v["interpret.min_occurrences"] < 1:
            violations.append("interpret.min_occurrences must be >= 1")
        if v["interpret.max_workers"] < 1:
            violations.append("interpret.max_workers must be >= 1")
        if violations:
            raise ConfigValidationError(violations)

        return cls(
            values=values,
            seed=v["seed"],
            ingest=IngestConfig(
                claims_file=v["data.claims_file"],
                pool_file=v["data.pool_file"],
                split_file=v["data.split_file"],
                stance_key=v["data.stance_key"],
                label_map={str(k).upper(): val for k, val in v["data.label_map"].items()},
            ),
            encoder=encoder,
            train=train,
            eval_split=eval_split,
            interpret_mode=mode,
            data_path=v["data.path"],
            raw_dir=v["data.raw_dir"],
            output_dir=v["output.dir"],
            top_k=v["interpret.top_k"],
            min_occurrences=v["interpret.min_occurrences"],
            chunker=v["interpret.chunker"],
            max_workers=v["interpret.max_workers"],
        )

    @classmethod
    def load(
        cls,
        path: Optional[Union[str, Path]] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> "ExperimentConfig":
        """Read a flat JSON config file (optional) and apply overrides."""
        values: Dict[str, Any] = {}
        if path:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    values = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigValidationError([f"cannot read config {path}: {str(e)}"]) from e
            if not isinstance(values, dict):
                raise ConfigValidationError([f"config {path} must hold a JSON object"])
        values.update(overrides or {})
        return cls.from_flat(values)

    def to_flat(self) -> Dict[str, Any]:
        return dict(sorted(self.values.items()))

    def save(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / CONFIG_FILE
        write_json(path, self.to_flat())
        logger.info(f"Wrote resolved config to {path}")
        return path
