"""
Stance Models

BASE classifies the encoded claim-perspective pair with a softmax head.
CONS additionally encodes the claim alone with the same encoder, appends
the cosine between the claim and pair representations to the pair
features, and trains on cross-entropy plus the cosine consistency loss.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from src.data.records import StanceLabel, StancePair
from src.encoder.encoder_service import ContextualEncoder
from src.model.losses import (
    LossDiagnostics,
    cosine_embedding_loss_from_cosine,
    cosine_similarity,
    cross_entropy_loss,
    joint_loss,
)
from src.utils.errors import ContractError

logger = logging.getLogger(__name__)

NUM_LABELS = len(StanceLabel)


class Variant(str, Enum):
    BASE = "BASE"
    CONS = "CONS"
    LSTM_BASELINE = "LSTM_BASELINE"


@dataclass(frozen=True)
class Prediction:
    """Class probabilities (SUPPORT, OPPOSE), argmax label, CONS cosine."""

    probs: Tuple[float, ...]
    label: StanceLabel
    cosine: Optional[float] = None

    def __post_init__(self) -> None:
        if len(self.probs) != NUM_LABELS:
            raise ContractError(f"expected {NUM_LABELS} probabilities, got {len(self.probs)}")
        if abs(sum(self.probs) - 1.0) > 1e-6:
            raise ContractError(f"probabilities sum to {sum(self.probs)}")

    @classmethod
    def from_probs(cls, probs: Sequence[float], cosine: Optional[float] = None) -> "Prediction":
        probs = tuple(float(p) for p in probs)
        # ties go to SUPPORT
        label = StanceLabel.SUPPORT if probs[0] >= probs[1] else StanceLabel.OPPOSE
        return cls(probs=probs, label=label, cosine=cosine)

    @property
    def support_probability(self) -> float:
        return self.probs[StanceLabel.SUPPORT.index]


@dataclass
class StanceBatch:
    pair_inputs: Dict[str, torch.Tensor]
    labels: torch.Tensor
    pair_ids: List[str]
    claim_inputs: Optional[Dict[str, torch.Tensor]] = None


@dataclass
class StanceOutput:
    logits: torch.Tensor
    probs: torch.Tensor
    pair_repr: torch.Tensor
    claim_repr: Optional[torch.Tensor] = None
    cosine: Optional[torch.Tensor] = None


@dataclass
class LossBreakdown:
    ce: torch.Tensor
    cos: torch.Tensor
    joint: torch.Tensor

    def as_floats(self) -> Dict[str, float]:
        return {"ce": float(self.ce.detach()), "cos": float(self.cos.detach()),
                "joint": float(self.joint.detach())}


def labels_tensor(pairs: Sequence[StancePair]) -> torch.Tensor:
    return torch.tensor([p.label.index for p in pairs], dtype=torch.long)


class StanceClassifier(nn.Module):
    """Shared batching, loss and inference plumbing for every variant."""

    variant: Variant

    def collate(self, pairs: Sequence[StancePair]) -> StanceBatch:
        raise NotImplementedError

    def compute_loss(self, output: StanceOutput, labels: torch.Tensor) -> LossBreakdown:
        ce = cross_entropy_loss(output.probs, labels.to(output.probs.device), self.diagnostics)
        zero = torch.zeros((), dtype=ce.dtype, device=ce.device)
        return LossBreakdown(ce=ce, cos=zero, joint=joint_loss(ce, zero))

    @property
    def device(self) -> torch.device:
        return next(self.parameters()).device

    def _predict_batches(self, batches: Sequence[StanceBatch]) -> List[Prediction]:
        was_training = self.training
        self.eval()
        predictions: List[Prediction] = []
        try:
            with torch.no_grad():
                for batch in batches:
                    output = self(batch)
                    cosines = output.cosine.tolist() if output.cosine is not None else None
                    for row, probs in enumerate(output.probs.tolist()):
                        predictions.append(Prediction.from_probs(
                            probs, cosine=cosines[row] if cosines is not None else None))
        finally:
            self.train(was_training)
        return predictions

    def predict(self, pairs: Sequence[StancePair], batch_size: int = 32) -> List[Prediction]:
        """Inference-mode predictions, in input order."""
        batches = (self.collate(pairs[i:i + batch_size]) for i in range(0, len(pairs), batch_size))
        return self._predict_batches(list(batches))


class ClassifierHead(nn.Module):
    """Softmax layer weights W of shape K x D (no bias)."""

    def __init__(self, input_dim: int, num_labels: int = NUM_LABELS, init_std: float = 0.02):
        super().__init__()
        if num_labels != NUM_LABELS:
            raise ContractError(f"head must have {NUM_LABELS} outputs, got {num_labels}")
        self.W = nn.Parameter(torch.empty(num_labels, input_dim))
        nn.init.normal_(self.W, mean=0.0, std=init_std)

    @property
    def input_dim(self) -> int:
        return int(self.W.shape[1])

    @property
    def num_labels(self) -> int:
        return int(self.W.shape[0])

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return features @ self.W.t()


class StancyModel(StanceClassifier):
    """
    Encoder plus classifier head, in the BASE or CONS variant.

    Args:
        encoder: Contextual encoder shared by the claim-only and pair passes
        variant: Variant.BASE or Variant.CONS
        cos_weight: Weight of the consistency loss in the joint objective
        detach_cosine_feature: Feed the head a detached cosine (ablation)
        head: Optional pre-built head; its input size must match the variant
    """

    def __init__(
        self,
        encoder: ContextualEncoder,
        variant: Variant = Variant.CONS,
        cos_weight: float = 1.0,
        detach_cosine_feature: bool = False,
        head: Optional[ClassifierHead] = None,
    ):
        super().__init__()
        variant = Variant(variant)
        if variant is Variant.LSTM_BASELINE:
            raise ContractError("StancyModel supports the BASE and CONS variants only")
        self.variant = variant
        self.encoder = encoder
        self.cos_weight = float(cos_weight)
        self.detach_cosine_feature = bool(detach_cosine_feature)
        expected = self.feature_size
        self.head = head if head is not None else ClassifierHead(expected)
        if self.head.input_dim != expected:
            raise ContractError(
                f"{variant.value} head needs input size {expected}, got {self.head.input_dim}")
        self.diagnostics = LossDiagnostics()
        logger.info(f"StancyModel initialized: variant={variant.value}, feature size={expected}")

    @property
    def feature_size(self) -> int:
        hidden = self.encoder.hidden_size
        return hidden + 1 if self.variant is Variant.CONS else hidden

    def collate(self, pairs: Sequence[StancePair]) -> StanceBatch:
        return self.collate_texts(
            [(p.claim_text, p.perspective_text) for p in pairs],
            labels=labels_tensor(pairs),
            pair_ids=[p.pair_id for p in pairs],
        )

    def collate_texts(
        self,
        texts: Sequence[Tuple[str, str]],
        labels: Optional[torch.Tensor] = None,
        pair_ids: Optional[List[str]] = None,
        allow_empty_perspective: bool = False,
    ) -> StanceBatch:
        pair_seqs = [self.encoder.pack_pair(c, p, allow_empty_perspective) for c, p in texts]
        claim_inputs = None
        if self.variant is Variant.CONS:
            claim_inputs = self.encoder.collate([self.encoder.pack_claim_only(c) for c, _ in texts])
        return StanceBatch(
            pair_inputs=self.encoder.collate(pair_seqs),
            claim_inputs=claim_inputs,
            labels=labels if labels is not None else torch.zeros(len(texts), dtype=torch.long),
            pair_ids=pair_ids or [str(i) for i in range(len(texts))],
        )

    def forward(self, batch: StanceBatch) -> StanceOutput:
        pair_repr = self.encoder(batch.pair_inputs)
        if self.variant is Variant.BASE:
            logits = self.head(pair_repr)
            return StanceOutput(logits=logits, probs=F.softmax(logits, dim=-1), pair_repr=pair_repr)

        if batch.claim_inputs is None:
            raise ContractError("CONS forward needs claim-only inputs")
        claim_repr = self.encoder(batch.claim_inputs)
        cosine = cosine_similarity(claim_repr, pair_repr)
        cosine_feature = cosine.detach() if self.detach_cosine_feature else cosine
        features = torch.cat([pair_repr, cosine_feature.unsqueeze(-1)], dim=-1)
        logits = self.head(features)
        return StanceOutput(
            logits=logits,
            probs=F.softmax(logits, dim=-1),
            pair_repr=pair_repr,
            claim_repr=claim_repr,
            cosine=cosine,
        )

    def compute_loss(self, output: StanceOutput, labels: torch.Tensor) -> LossBreakdown:
        labels = labels.to(output.probs.device)
        ce = cross_entropy_loss(output.probs, labels, self.diagnostics)
        if self.variant is Variant.BASE:
            cos = torch.zeros((), dtype=ce.dtype, device=ce.device)
        else:
            # SUPPORT (index 0) -> +1, OPPOSE (index 1) -> -1
            cos = cosine_embedding_loss_from_cosine(output.cosine, 1 - 2 * labels)
        return LossBreakdown(ce=ce, cos=cos, joint=joint_loss(ce, cos, self.cos_weight))

    def predict_texts(
        self,
        claim: str,
        perspectives: Sequence[str],
        batch_size: int = 32,
    ) -> List[Prediction]:
        """Predictions for one claim against several (possibly empty) perspectives."""
        texts = [(claim, p) for p in perspectives]
        batches = [
            self.collate_texts(texts[i:i + batch_size], allow_empty_perspective=True)
            for i in range(0, len(texts), batch_size)
        ]
        return self._predict_batches(batches)


def _require_variant(model: StanceClassifier, variant: Variant) -> None:
    if getattr(model, "variant", None) is not variant:
        raise ContractError(
            f"expected a {variant.value} model, got {getattr(model, 'variant', None)}")


def forward_base(model: StancyModel, pair: StancePair) -> Prediction:
    """Softmax over the head applied to the pair representation."""
    _require_variant(model, Variant.BASE)
    return model.predict([pair])[0]


def forward_cons(model: StancyModel, pair: StancePair) -> Prediction:
    """Softmax over the head applied to [pair representation; cosine], cosine included."""
    _require_variant(model, Variant.CONS)
    return model.predict([pair])[0]
