"""
Checkpoint Manager

A checkpoint is a directory holding everything needed to rebuild
bit-identical inference: checkpoint.json (variant, encoder spec, loss
settings and the resolved experiment config), the encoder directory and
head weights for BASE/CONS, or the baseline weights and vocabulary.
Directories are staged next to the target and renamed into place.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch

from src.encoder.encoder_service import ContextualEncoder
from src.model.lstm_baseline import LSTMStanceClassifier, WordVocabulary
from src.model.stance_model import ClassifierHead, StanceClassifier, StancyModel, Variant
from src.utils.errors import CheckpointLoadError, ContractError
from src.utils.io_utils import replace_directory, staging_directory, write_json

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "checkpoint.json"


@dataclass
class Checkpoint:
    model: StanceClassifier
    variant: Variant
    config: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None


def save_checkpoint(
    model: StanceClassifier,
    directory: Union[str, Path],
    config: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a checkpoint directory atomically and return its path."""
    directory = Path(directory)
    staging = staging_directory(directory)
    manifest: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "variant": model.variant.value,
        "config": config or {},
    }
    if isinstance(model, StancyModel):
        model.encoder.save(staging / "encoder")
        torch.save(model.head.state_dict(), staging / "head.pt")
        manifest.update({
            "encoder_spec": model.encoder.spec.to_dict(),
            "cos_weight": model.cos_weight,
            "detach_cosine_feature": model.detach_cosine_feature,
        })
    elif isinstance(model, LSTMStanceClassifier):
        torch.save(model.state_dict(), staging / "baseline.pt")
        write_json(staging / "vocab.json", model.vocabulary.words)
        manifest.update({
            "embedding_dim": model.embedding_dim,
            "hidden_size": model.hidden_size,
            "dense_size": model.dense_size,
            "max_tokens": model.max_tokens,
        })
    else:
        raise ContractError(f"cannot checkpoint {type(model).__name__}")
    write_json(staging / MANIFEST, manifest)
    replace_directory(staging, directory)
    logger.info(f"Saved {model.variant.value} checkpoint to {directory}")
    return directory


def load_checkpoint(directory: Union[str, Path]) -> Checkpoint:
    """
    Rebuild a model from a checkpoint directory, in inference mode.

    Raises:
        CheckpointLoadError: missing or corrupt parts
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST
    if not manifest_path.is_file():
        raise CheckpointLoadError(f"No {MANIFEST} in {directory}")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        variant = Variant(manifest["variant"])
        if variant is Variant.LSTM_BASELINE:
            words = json.loads((directory / "vocab.json").read_text(encoding="utf-8"))
            vocabulary = WordVocabulary(words)
            model: StanceClassifier = LSTMStanceClassifier(
                vocabulary,
                torch.zeros(len(vocabulary), manifest["embedding_dim"]),
                hidden_size=manifest["hidden_size"],
                dense_size=manifest["dense_size"],
                max_tokens=manifest["max_tokens"],
            )
            state = torch.load(directory / "baseline.pt", map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        else:
            encoder = ContextualEncoder.load(directory / "encoder")
            hidden = encoder.hidden_size
            head = ClassifierHead(hidden + 1 if variant is Variant.CONS else hidden)
            head.load_state_dict(
                torch.load(directory / "head.pt", map_location="cpu", weights_only=True))
            model = StancyModel(
                encoder,
                variant=variant,
                cos_weight=manifest.get("cos_weight", 1.0),
                detach_cosine_feature=manifest.get("detach_cosine_feature", False),
                head=head,
            )
    except CheckpointLoadError:
        raise
    except (OSError, KeyError, ValueError, RuntimeError, ContractError) as e:
        raise CheckpointLoadError(f"Corrupt checkpoint {directory}: {str(e)}") from e

    model.eval()
    logger.info(f"Loaded {variant.value} checkpoint from {directory}")
    return Checkpoint(model=model, variant=variant, config=manifest.get("config", {}),
                      path=directory)
