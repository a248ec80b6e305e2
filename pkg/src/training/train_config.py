"""
Training configuration.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import torch

from src.model.stance_model import Variant

BERT_GRID_LEARNING_RATES = [1e-5, 3e-5, 5e-5]
BERT_GRID_BATCH_SIZES = [24, 28, 32]


@dataclass
class TrainConfig:
    """
    Optimisation settings for one training run (one grid, one variant).

    When grid_learning_rates / grid_batch_sizes are set they replace the
    single learning_rate / batch_size values.
    """

    variant: Variant = Variant.CONS
    learning_rate: float = 3e-5
    batch_size: int = 32
    epochs: int = 3
    seed: int = 42
    optimizer: str = "adam"
    grid_learning_rates: Optional[List[float]] = None
    grid_batch_sizes: Optional[List[int]] = None
    grad_clip_norm: Optional[float] = 1.0
    linear_warmup: bool = False
    warmup_ratio: float = 0.1
    cos_weight: float = 1.0
    detach_cosine_feature: bool = False
    num_workers: int = 0
    eval_batch_size: int = 64
    device: str = "auto"
    embeddings_path: Optional[str] = None
    embedding_dim: int = 300
    lstm_hidden_size: int = 128
    dense_size: int = 256

    def __post_init__(self) -> None:
        self.variant = Variant(self.variant)

    def validate(self) -> List[str]:
        """Every violated constraint, as readable messages."""
        violations = []
        for lr in self.grid_learning_rates or [self.learning_rate]:
            if not lr > 0:
                violations.append(f"train.learning_rate must be > 0, got {lr}")
        for bs in self.grid_batch_sizes or [self.batch_size]:
            if int(bs) < 1:
                violations.append(f"train.batch_size must be >= 1, got {bs}")
        if self.epochs < 1:
            violations.append(f"train.epochs must be >= 1, got {self.epochs}")
        if self.optimizer != "adam":
            violations.append(f"train.optimizer must be 'adam', got {self.optimizer!r}")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0:
            violations.append("train.grad_clip_norm must be positive or null")
        if not 0 <= self.warmup_ratio < 1:
            violations.append("train.warmup_ratio must be in [0, 1)")
        if self.cos_weight < 0:
            violations.append("loss.cos_weight must be non-negative")
        if self.num_workers < 0:
            violations.append("train.num_workers must be >= 0")
        if self.device not in ("auto", "cpu", "cuda"):
            violations.append(f"train.device must be auto, cpu or cuda, got {self.device!r}")
        for name in ("embedding_dim", "lstm_hidden_size", "dense_size", "eval_batch_size"):
            if getattr(self, name) < 1:
                violations.append(f"{name} must be >= 1")
        return violations

    def grid_points(self) -> List[Tuple[float, int]]:
        """(learning_rate, batch_size) combinations, learning-rate major."""
        rates = self.grid_learning_rates or [self.learning_rate]
        sizes = self.grid_batch_sizes or [self.batch_size]
        return [(float(lr), int(bs)) for lr in rates for bs in sizes]

    def resolve_device(self) -> torch.device:
        if self.device == "auto":
            return torch.device("cuda" if torch.cuda.is_available() else "cpu")
        return torch.device(self.device)
