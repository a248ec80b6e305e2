"""
McNemar Test

Paired comparison of two prediction files over the same pairs. Uses the
exact binomial test below EXACT_THRESHOLD discordant pairs and the
continuity-corrected chi-square statistic otherwise.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

from statsmodels.stats.contingency_tables import mcnemar as statsmodels_mcnemar

from src.evaluation.predictions import PredictionFile
from src.utils.errors import AlignmentError

logger = logging.getLogger(__name__)

EXACT_THRESHOLD = 25


@dataclass(frozen=True)
class McNemarResult:
    statistic: float
    p_value: float
    b_count: int
    c_count: int
    exact: bool

    @property
    def discordant(self) -> int:
        return self.b_count + self.c_count

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["discordant"] = self.discordant
        record["method"] = "exact-binomial" if self.exact else "chi-square-corrected"
        return record


def mcnemar_from_counts(b_count: int, c_count: int,
                        exact_threshold: int = EXACT_THRESHOLD) -> McNemarResult:
    """McNemar test from the two discordant counts."""
    exact = b_count + c_count < exact_threshold
    # concordant cells do not enter either statistic
    table = [[0, b_count], [c_count, 0]]
    result = statsmodels_mcnemar(table, exact=exact, correction=True)
    return McNemarResult(
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        b_count=int(b_count),
        c_count=int(c_count),
        exact=exact,
    )


def mcnemar(a: PredictionFile, b: PredictionFile,
            exact_threshold: int = EXACT_THRESHOLD) -> McNemarResult:
    """
    Compare two systems' predictions on the same pairs.

    b_count counts pairs system a gets right and b gets wrong; c_count the
    reverse.

    Raises:
        AlignmentError: the files cover different pair ids or disagree on gold
    """
    a_by_id, b_by_id = a.by_id(), b.by_id()
    missing, extra = set(a_by_id) - set(b_by_id), set(b_by_id) - set(a_by_id)
    if missing or extra:
        raise AlignmentError("Prediction files cover different pairs", missing=missing, extra=extra)

    b_count = c_count = 0
    conflicting = set()
    for pair_id in sorted(a_by_id):
        ra, rb = a_by_id[pair_id], b_by_id[pair_id]
        if ra.gold is not rb.gold:
            conflicting.add(pair_id)
            continue
        if ra.correct and not rb.correct:
            b_count += 1
        elif rb.correct and not ra.correct:
            c_count += 1
    if conflicting:
        raise AlignmentError("Prediction files disagree on gold labels", extra=conflicting)

    result = mcnemar_from_counts(b_count, c_count, exact_threshold)
    logger.info(f"McNemar: b={b_count}, c={c_count}, p={result.p_value:.4g}")
    return result
