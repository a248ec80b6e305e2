"""
Prediction files: one JSON object per line with pair_id, gold, predicted,
probs and (CONS only) cosine, in the order of the evaluated pairs.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from src.data.records import StanceLabel, StancePair
from src.model.stance_model import StanceClassifier
from src.utils.errors import AlignmentError, CanonicalParseError
from src.utils.io_utils import iter_jsonl, write_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionRecord:
    pair_id: str
    gold: StanceLabel
    predicted: StanceLabel
    probs: Tuple[float, ...]
    cosine: Optional[float] = None

    @property
    def correct(self) -> bool:
        return self.gold is self.predicted

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "pair_id": self.pair_id,
            "gold": self.gold.value,
            "predicted": self.predicted.value,
            "probs": list(self.probs),
        }
        if self.cosine is not None:
            record["cosine"] = self.cosine
        return record


@dataclass
class PredictionFile:
    records: List[PredictionRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def pair_ids(self) -> List[str]:
        return [r.pair_id for r in self.records]

    def by_id(self) -> Dict[str, PredictionRecord]:
        """Index records by pair_id, rejecting duplicates."""
        index: Dict[str, PredictionRecord] = {}
        duplicates = set()
        for record in self.records:
            if record.pair_id in index:
                duplicates.add(record.pair_id)
            index[record.pair_id] = record
        if duplicates:
            raise AlignmentError("Prediction file has duplicated pair ids", duplicates=duplicates)
        return index


def predict_split(
    model: StanceClassifier,
    pairs: Sequence[StancePair],
    batch_size: int = 32,
) -> PredictionFile:
    """Run inference over pairs and collect a PredictionFile in pair order."""
    predictions = model.predict(list(pairs), batch_size=batch_size)
    return PredictionFile([
        PredictionRecord(
            pair_id=pair.pair_id,
            gold=pair.label,
            predicted=prediction.label,
            probs=prediction.probs,
            cosine=prediction.cosine,
        )
        for pair, prediction in zip(pairs, predictions)
    ])


def write_predictions(predictions: PredictionFile, path: Union[str, Path]) -> None:
    count = write_jsonl(path, (r.to_record() for r in predictions.records))
    logger.info(f"Wrote {count} predictions to {path}")


def read_predictions(path: Union[str, Path]) -> PredictionFile:
    records = []
    for line_number, raw in iter_jsonl(path):
        try:
            records.append(PredictionRecord(
                pair_id=str(raw["pair_id"]),
                gold=StanceLabel(raw["gold"]),
                predicted=StanceLabel(raw["predicted"]),
                probs=tuple(float(p) for p in raw["probs"]),
                cosine=raw.get("cosine"),
            ))
        except (KeyError, ValueError, TypeError) as e:
            raise CanonicalParseError(f"bad prediction record ({e})", line_number) from e
    return PredictionFile(records)
