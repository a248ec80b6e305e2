"""
Evaluation Metrics

Per-class and macro-averaged precision / recall / F1 (percentages) from
the 2x2 confusion matrix. Macro F1 is the mean of the per-class F1s.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Union

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from src.data.records import StanceLabel, StancePair
from src.evaluation.predictions import PredictionFile, predict_split
from src.model.stance_model import StanceClassifier
from src.utils.errors import AlignmentError, InputError

logger = logging.getLogger(__name__)

LABELS = list(StanceLabel)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    per_class: Dict[StanceLabel, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    confusion: List[List[int]]
    flags: List[str] = field(default_factory=list)

    def to_record(self) -> Dict[str, Any]:
        return {
            "per_class": {
                label.value: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "accuracy": self.accuracy,
            "confusion": {"labels": [l.value for l in LABELS], "matrix": self.confusion},
            "flags": list(self.flags),
        }


def compute_metrics(gold: Sequence[StanceLabel], predicted: Sequence[StanceLabel]) -> EvalReport:
    """Metrics from aligned gold and predicted label sequences."""
    if not gold:
        raise InputError("cannot evaluate an empty set of pairs")
    y_true = [StanceLabel(g).index for g in gold]
    y_pred = [StanceLabel(p).index for p in predicted]
    indices = [label.index for label in LABELS]

    matrix = confusion_matrix(y_true, y_pred, labels=indices)
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=indices, average=None, zero_division=0)

    flags = []
    for label in LABELS:
        if matrix[:, label.index].sum() == 0:
            flags.append(f"precision undefined for {label.value} (no predictions); reported as 0")
        if matrix[label.index, :].sum() == 0:
            flags.append(f"recall undefined for {label.value} (no gold pairs); reported as 0")
    for flag in flags:
        logger.warning(flag)

    per_class = {
        label: ClassMetrics(
            precision=100.0 * float(precision[label.index]),
            recall=100.0 * float(recall[label.index]),
            f1=100.0 * float(f1[label.index]),
            support=int(support[label.index]),
        )
        for label in LABELS
    }
    return EvalReport(
        per_class=per_class,
        macro_precision=float(np.mean([m.precision for m in per_class.values()])),
        macro_recall=float(np.mean([m.recall for m in per_class.values()])),
        macro_f1=float(np.mean([m.f1 for m in per_class.values()])),
        accuracy=100.0 * float(accuracy_score(y_true, y_pred)),
        confusion=matrix.tolist(),
        flags=flags,
    )


def evaluate(
    source: Union[StanceClassifier, PredictionFile],
    pairs: Sequence[StancePair],
    batch_size: int = 32,
) -> EvalReport:
    """
    Evaluate a model or a prediction file against gold pairs.

    Raises:
        AlignmentError: prediction ids do not exactly cover the pairs
    """
    predictions = source if isinstance(source, PredictionFile) else predict_split(
        source, pairs, batch_size=batch_size)
    by_id = predictions.by_id()
    gold_ids = [p.pair_id for p in pairs]
    missing = set(gold_ids) - set(by_id)
    extra = set(by_id) - set(gold_ids)
    if missing or extra:
        raise AlignmentError("Predictions do not match the evaluated pairs",
                             missing=missing, extra=extra)
    return compute_metrics(
        [p.label for p in pairs],
        [by_id[p.pair_id].predicted for p in pairs],
    )
