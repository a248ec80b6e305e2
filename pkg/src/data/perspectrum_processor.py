"""
Perspectrum Processor

Reads the released Perspectrum files (claims with perspective clusters,
the perspective pool and the claim split assignment) and produces one
canonical StancePair per (claim, perspective, stance) triple.
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Union

from src.data.records import Split, StanceLabel, StancePair
from src.utils.errors import IngestionError, RecordError

logger = logging.getLogger(__name__)

# Stance sub-label collapse table. Sub-labels not listed here are skipped.
DEFAULT_LABEL_MAP: Dict[str, str] = {
    "SUPPORT": "SUPPORT",
    "MILDLY-SUPPORT": "SUPPORT",
    "UNDERMINE": "OPPOSE",
    "MILDLY-UNDERMINE": "OPPOSE",
}


@dataclass
class IngestConfig:
    """Where the released files live and how stances collapse to binary."""

    claims_file: str = "perspectrum_with_answers_v1.0.json"
    pool_file: str = "perspective_pool_v1.0.json"
    split_file: str = "dataset_split_v1.0.json"
    stance_key: str = "stance_label_3"
    label_map: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_LABEL_MAP))

    def collapse(self, sub_label: Optional[str]) -> Optional[StanceLabel]:
        if sub_label is None:
            return None
        mapped = self.label_map.get(str(sub_label).upper())
        return StanceLabel(mapped) if mapped else None


def _load_json(path: Path) -> Any:
    if not path.is_file():
        raise IngestionError(f"Perspectrum file not found: {path.name}", path=str(path))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise IngestionError(f"Perspectrum file {path.name} is not valid JSON: {e.msg}",
                             path=str(path)) from e


def ingest_perspectrum(
    raw_dataset_dir: Union[str, Path],
    config: Optional[IngestConfig] = None,
) -> List[StancePair]:
    """
    Ingest the released Perspectrum dataset.

    Args:
        raw_dataset_dir: Directory holding the claim, pool and split files
        config: File names and sub-label collapse table

    Returns:
        StancePairs ordered by claim, then cluster, then perspective id

    Raises:
        IngestionError: if a file is missing or unreadable
        RecordError: if a perspective or claim id cannot be resolved
    """
    config = config or IngestConfig()
    root = Path(raw_dataset_dir)
    if not root.is_dir():
        raise IngestionError(f"Perspectrum directory not found: {root}", path=str(root))

    claims = _load_json(root / config.claims_file)
    pool = _load_json(root / config.pool_file)
    split_assignment = _load_json(root / config.split_file)

    perspectives = {str(p["pId"]): p["text"] for p in pool}
    logger.info(f"Loaded {len(claims)} claims and {len(perspectives)} pooled perspectives")

    pairs: List[StancePair] = []
    seen: Dict[str, StanceLabel] = {}
    missing_perspectives: Set[str] = set()
    unassigned_claims: Set[str] = set()
    skipped = Counter()

    for claim in claims:
        claim_id = str(claim["cId"])
        raw_split = split_assignment.get(claim_id)
        try:
            split = Split(str(raw_split).lower())
        except ValueError:
            unassigned_claims.add(claim_id)
            continue

        for cluster in claim.get("perspectives", []):
            sub_label = cluster.get(config.stance_key)
            label = config.collapse(sub_label)
            if label is None:
                skipped[str(sub_label)] += len(cluster.get("pids", []))
                continue
            for pid in cluster.get("pids", []):
                pid = str(pid)
                if pid not in perspectives:
                    missing_perspectives.add(pid)
                    continue
                pair_id = f"{claim_id}_{pid}"
                if pair_id in seen:
                    logger.warning(f"Duplicate pair {pair_id} (labels {seen[pair_id].value}, "
                                   f"{label.value}); keeping the first")
                    continue
                seen[pair_id] = label
                pairs.append(StancePair.create(
                    pair_id=pair_id,
                    claim_text=claim["text"],
                    perspective_text=perspectives[pid],
                    label=label,
                    split=split,
                ))

    if missing_perspectives:
        raise RecordError("Perspective ids referenced but absent from the pool",
                          ids=missing_perspectives)
    if unassigned_claims:
        raise RecordError("Claim ids without a valid split assignment", ids=unassigned_claims)
    for sub_label, count in sorted(skipped.items()):
        logger.warning(f"Skipped {count} perspectives with uncollapsed stance '{sub_label}'")

    logger.info(f"Ingested {len(pairs)} stance pairs from {root}")
    return pairs
