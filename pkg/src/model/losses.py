"""
Stance Losses

Cosine similarity, the cosine embedding consistency loss, cross-entropy over
class probabilities and the joint objective. All functions accept tensors
(single instances or batches along the first axis) and reduce batches by
their arithmetic mean.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import torch

from src.data.records import StanceLabel
from src.encoder.encoder_service import PooledRepresentation
from src.utils.errors import ContractError, NumericalDegeneracyError

logger = logging.getLogger(__name__)

PROBABILITY_EPSILON = 1e-12
COSINE_FLOOR = 1e-8

VectorLike = Union[torch.Tensor, PooledRepresentation, Sequence[float]]


@dataclass
class LossDiagnostics:
    """Counts of numerically clamped loss terms."""

    clamped_probabilities: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __getstate__(self) -> dict:
        state = self.__dict__.copy()
        state.pop("_lock", None)
        return state

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def record_clamp(self, count: int) -> None:
        with self._lock:
            self.clamped_probabilities += count


def _as_tensor(value: Any) -> torch.Tensor:
    if isinstance(value, PooledRepresentation):
        return value.vector
    if isinstance(value, torch.Tensor):
        return value
    return torch.as_tensor(value, dtype=torch.float64)


def cosine_similarity(a: VectorLike, b: VectorLike) -> torch.Tensor:
    """
    dot(a, b) / (|a| |b|) along the last axis, clamped to [-1, 1].

    Raises:
        ContractError: on shape mismatch
        NumericalDegeneracyError: if any vector has zero norm
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ContractError(f"cosine over mismatched shapes {tuple(a.shape)} and {tuple(b.shape)}")
    norm_a = torch.linalg.vector_norm(a, dim=-1)
    norm_b = torch.linalg.vector_norm(b, dim=-1)
    if bool((norm_a == 0).any()) or bool((norm_b == 0).any()):
        raise NumericalDegeneracyError("cosine similarity of a zero-norm vector")
    cosine = (a * b).sum(dim=-1) / torch.clamp(norm_a * norm_b, min=COSINE_FLOOR)
    return cosine.clamp(-1.0, 1.0)


def _similarity_targets(y_sim: Any, like: torch.Tensor) -> torch.Tensor:
    targets = torch.as_tensor(y_sim, device=like.device)
    if not bool(((targets == 1) | (targets == -1)).all()):
        raise ContractError(f"y_sim must be +1 or -1, got {targets.tolist()}")
    return targets.to(like.dtype).expand_as(like)


def cosine_embedding_loss_from_cosine(cosine: torch.Tensor, y_sim: Any) -> torch.Tensor:
    """Consistency loss from precomputed cosines: 1 - cos for +1, max(0, cos) for -1."""
    targets = _similarity_targets(y_sim, cosine)
    losses = torch.where(targets > 0, 1.0 - cosine, cosine.clamp(min=0.0))
    return losses.mean()


def cosine_embedding_loss(xc: VectorLike, xpc: VectorLike, y_sim: Any) -> torch.Tensor:
    """Cosine embedding loss between claim and pair representations."""
    return cosine_embedding_loss_from_cosine(cosine_similarity(xc, xpc), y_sim)


def _gold_indices(gold: Any, device: torch.device) -> torch.Tensor:
    if isinstance(gold, StanceLabel):
        gold = [gold.index]
    elif isinstance(gold, (list, tuple)):
        gold = [g.index if isinstance(g, StanceLabel) else int(g) for g in gold]
    indices = torch.as_tensor(gold, dtype=torch.long, device=device)
    return indices.reshape(-1)


def cross_entropy_loss(
    probs: VectorLike,
    gold: Any,
    diagnostics: Optional[LossDiagnostics] = None,
) -> torch.Tensor:
    """
    Mean of -log(probs[gold]).

    Probabilities below PROBABILITY_EPSILON are clamped and counted.
    """
    probs = _as_tensor(probs)
    if probs.dim() == 1:
        probs = probs.unsqueeze(0)
    indices = _gold_indices(gold, probs.device)
    if indices.shape[0] != probs.shape[0]:
        raise ContractError(f"{probs.shape[0]} probability rows but {indices.shape[0]} gold labels")
    picked = probs.gather(1, indices.unsqueeze(1)).squeeze(1)
    clamped = int((picked < PROBABILITY_EPSILON).sum())
    if clamped:
        logger.warning(f"Clamped {clamped} gold-class probabilities to {PROBABILITY_EPSILON}")
        if diagnostics is not None:
            diagnostics.record_clamp(clamped)
    return -torch.log(picked.clamp(min=PROBABILITY_EPSILON)).mean()


def joint_loss(ce: Any, cos: Any, cos_weight: float = 1.0) -> Any:
    """loss_ce + cos_weight * loss_cos (unweighted sum by default)."""
    for name, value in (("ce", ce), ("cos", cos)):
        if float(value.detach() if isinstance(value, torch.Tensor) else value) < 0:
            raise ContractError(f"{name} loss must be non-negative")
    return ce + cos_weight * cos
