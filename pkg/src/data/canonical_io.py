"""
Canonical record files: one JSON object per line with the fields
pair_id, claim_text, perspective_text, label and split.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Set, Union

from src.data.records import StancePair
from src.utils.errors import CanonicalParseError, RecordError, StancyError
from src.utils.io_utils import iter_jsonl, write_jsonl

logger = logging.getLogger(__name__)

CANONICAL_FIELDS = ("pair_id", "claim_text", "perspective_text", "label", "split")


def write_canonical(pairs: Iterable[StancePair], out: Union[str, Path]) -> int:
    """Write pairs in order; returns the record count."""
    count = write_jsonl(out, (p.to_record() for p in pairs))
    logger.info(f"Wrote {count} canonical records to {out}")
    return count


def read_canonical(path: Union[str, Path]) -> List[StancePair]:
    """
    Read a canonical record file.

    Raises:
        IngestionError: the file is missing or unreadable
        CanonicalParseError: malformed line, with its line number
        RecordError: duplicated pair_id
    """
    pairs: List[StancePair] = []
    seen: Set[str] = set()
    duplicates: Set[str] = set()
    for line_number, record in iter_jsonl(path):
        missing = [f for f in CANONICAL_FIELDS if f not in record]
        if missing:
            raise CanonicalParseError(f"missing field(s) {', '.join(missing)}", line_number)
        try:
            pair = StancePair(**{f: record[f] for f in CANONICAL_FIELDS})
        except (StancyError, ValueError, TypeError) as e:
            raise CanonicalParseError(str(e), line_number) from e
        if pair.pair_id in seen:
            duplicates.add(pair.pair_id)
        seen.add(pair.pair_id)
        pairs.append(pair)
    if duplicates:
        raise RecordError(f"Duplicate pair ids in {path}", ids=duplicates)
    return pairs
