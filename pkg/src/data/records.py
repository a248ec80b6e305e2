"""
Stance Records

Canonical claim/perspective records, their labels and splits, and the
per-split corpus statistics.
"""

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List

from src.utils.errors import InputError

_WHITESPACE = re.compile(r"\s+")


class StanceLabel(str, Enum):
    """Binary stance of a perspective towards a claim."""

    SUPPORT = "SUPPORT"
    OPPOSE = "OPPOSE"

    @property
    def index(self) -> int:
        """Class index used by the classifier heads (SUPPORT=0, OPPOSE=1)."""
        return 0 if self is StanceLabel.SUPPORT else 1

    @classmethod
    def from_index(cls, index: int) -> "StanceLabel":
        return cls.SUPPORT if int(index) == 0 else cls.OPPOSE

    def to_sim_target(self) -> int:
        """+1 when claim and perspective representations should agree, -1 otherwise."""
        return 1 if self is StanceLabel.SUPPORT else -1


class Split(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


def to_sim_target(label: StanceLabel) -> int:
    return StanceLabel(label).to_sim_target()


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to one space and strip both ends."""
    return _WHITESPACE.sub(" ", text).strip()


@dataclass(frozen=True)
class StancePair:
    """One claim/perspective instance with its gold stance and split."""

    pair_id: str
    claim_text: str
    perspective_text: str
    label: StanceLabel
    split: Split

    def __post_init__(self) -> None:
        if not isinstance(self.pair_id, str) or not self.pair_id:
            raise InputError("pair_id must be a non-empty string")
        for name in ("claim_text", "perspective_text"):
            value = getattr(self, name)
            if not isinstance(value, str) or not normalize_text(value):
                raise InputError(f"{name} of pair {self.pair_id} is empty")
        object.__setattr__(self, "label", StanceLabel(self.label))
        object.__setattr__(self, "split", Split(self.split))

    @classmethod
    def create(
        cls,
        pair_id: str,
        claim_text: str,
        perspective_text: str,
        label: StanceLabel,
        split: Split,
    ) -> "StancePair":
        """Build a pair with whitespace-normalized texts."""
        return cls(
            pair_id=pair_id,
            claim_text=normalize_text(claim_text),
            perspective_text=normalize_text(perspective_text),
            label=label,
            split=split,
        )

    def to_record(self) -> Dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "claim_text": self.claim_text,
            "perspective_text": self.perspective_text,
            "label": self.label.value,
            "split": self.split.value,
        }


@dataclass(frozen=True)
class SplitCounts:
    supporting_count: int = 0
    opposing_count: int = 0

    @property
    def total_count(self) -> int:
        return self.supporting_count + self.opposing_count


@dataclass(frozen=True)
class DatasetStats:
    """Supporting / opposing / total pair counts per split."""

    splits: Dict[Split, SplitCounts] = field(default_factory=dict)

    def __getitem__(self, split: Split) -> SplitCounts:
        return self.splits.get(Split(split), SplitCounts())

    @property
    def total(self) -> SplitCounts:
        return SplitCounts(
            supporting_count=sum(c.supporting_count for c in self.splits.values()),
            opposing_count=sum(c.opposing_count for c in self.splits.values()),
        )

    def to_records(self) -> List[Dict[str, Any]]:
        """Machine-readable rows, one per split plus a total row."""
        rows = []
        for split in Split:
            counts = self[split]
            rows.append({
                "split": split.value,
                "supporting": counts.supporting_count,
                "opposing": counts.opposing_count,
                "total": counts.total_count,
            })
        total = self.total
        rows.append({
            "split": "total",
            "supporting": total.supporting_count,
            "opposing": total.opposing_count,
            "total": total.total_count,
        })
        return rows


def compute_stats(pairs: Iterable[StancePair]) -> DatasetStats:
    """Count pairs by split and label."""
    counts = Counter((p.split, p.label) for p in pairs)
    return DatasetStats(splits={
        split: SplitCounts(
            supporting_count=counts[(split, StanceLabel.SUPPORT)],
            opposing_count=counts[(split, StanceLabel.OPPOSE)],
        )
        for split in Split
    })


def format_stats_table(stats: DatasetStats) -> str:
    """Render the statistics as a fixed-width table with a Total row."""
    header = f"{'Split':<8}{'Supporting Pairs':>18}{'Opposing Pairs':>16}{'Total Pairs':>13}"
    lines = [header, "-" * len(header)]
    for row in stats.to_records():
        if row["split"] == "total":
            lines.append("-" * len(header))
        name = "Total" if row["split"] == "total" else row["split"]
        lines.append(
            f"{name:<8}{row['supporting']:>18}{row['opposing']:>16}{row['total']:>13}"
        )
    return "\n".join(lines)


def filter_split(pairs: Iterable[StancePair], split: Split) -> List[StancePair]:
    split = Split(split)
    return [p for p in pairs if p.split is split]
