"""
Phrase Attribution

For a claim C and perspective P split into phrases, predict on every
prefix P_0 (empty) .. P_n (full) and score phrase i by
|p_support(C, P_i) - p_support(C, P_{i-1})|. Corpus-wide, phrases are
ranked per stance direction by their mean score.
"""

import logging
import string
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from tqdm import tqdm

from src.data.records import StanceLabel, StancePair
from src.interpret.segmentation import Chunker, PhraseSegmentation, SegmenterMode, segment
from src.model.stance_model import StancyModel
from src.utils.errors import ContractError
from src.utils.io_utils import atomic_write_text, write_json, write_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhraseAttribution:
    pair_id: str
    phrase: str
    index: int
    delta: float
    direction: StanceLabel
    support_shift: float

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["direction"] = self.direction.value
        return record


@dataclass(frozen=True)
class RankedPhrase:
    phrase: str
    score: float
    occurrences: int


def attribute(
    model: StancyModel,
    pair: StancePair,
    seg: PhraseSegmentation,
    batch_size: int = 32,
) -> List[PhraseAttribution]:
    """One attribution per phrase, in phrase order."""
    if not isinstance(model, StancyModel):
        raise ContractError("phrase attribution needs a BASE or CONS encoder model")
    prefixes = [seg.prefix(i) for i in range(len(seg) + 1)]
    predictions = model.predict_texts(pair.claim_text, prefixes, batch_size=batch_size)
    support = [p.support_probability for p in predictions]

    attributions = []
    for i, phrase in enumerate(seg.phrases, start=1):
        shift = support[i] - support[i - 1]
        attributions.append(PhraseAttribution(
            pair_id=pair.pair_id,
            phrase=phrase,
            index=i,
            delta=min(1.0, abs(shift)),
            direction=StanceLabel.SUPPORT if shift >= 0 else StanceLabel.OPPOSE,
            support_shift=shift,
        ))
    return attributions


def attribute_corpus(
    model: StancyModel,
    pairs: Sequence[StancePair],
    mode: SegmenterMode = SegmenterMode.UNIGRAM,
    chunker: Optional[Chunker] = None,
    max_workers: int = 1,
    batch_size: int = 32,
    progress: bool = True,
) -> Dict[str, List[PhraseAttribution]]:
    """Attribute every pair under a frozen model; results ordered by pair_id."""
    model.eval()

    def run(pair: StancePair) -> List[PhraseAttribution]:
        return attribute(model, pair, segment(pair.perspective_text, mode, chunker), batch_size)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = list(tqdm(pool.map(run, pairs), total=len(pairs),
                            desc="attributing", disable=not progress))
    merged = {pair.pair_id: result for pair, result in zip(pairs, results)}
    logger.info(f"Attributed {sum(len(r) for r in results)} phrases over {len(pairs)} pairs")
    return {pair_id: merged[pair_id] for pair_id in sorted(merged)}


def phrase_key(phrase: str) -> str:
    """Grouping key: lower-cased, surrounding punctuation stripped."""
    return phrase.strip().strip(string.punctuation).lower()


def rank_phrases(
    attributions: Iterable[PhraseAttribution],
    top_k: int,
    min_occurrences: int = 2,
) -> Dict[StanceLabel, List[RankedPhrase]]:
    """Top phrases per direction by mean delta, among phrases seen often enough."""
    deltas: Dict[StanceLabel, Dict[str, List[float]]] = {
        label: defaultdict(list) for label in StanceLabel}
    for attribution in attributions:
        key = phrase_key(attribution.phrase)
        if key:
            deltas[attribution.direction][key].append(attribution.delta)

    ranking = {}
    for label, by_phrase in deltas.items():
        ranked = [
            RankedPhrase(phrase=phrase, score=sum(values) / len(values), occurrences=len(values))
            for phrase, values in by_phrase.items()
            if len(values) >= min_occurrences
        ]
        ranked.sort(key=lambda r: (-r.score, -r.occurrences, r.phrase))
        ranking[label] = ranked[: max(0, top_k)]
    return ranking


def format_ranking(ranking: Dict[StanceLabel, List[RankedPhrase]]) -> str:
    """Side-by-side OPPOSE / SUPPORT columns."""
    oppose = ranking.get(StanceLabel.OPPOSE, [])
    support = ranking.get(StanceLabel.SUPPORT, [])
    lines = [f"{'Rank':<6}{'Opposing Class':<40}{'Supporting Class':<40}", "-" * 86]
    for i in range(max(len(oppose), len(support))):
        left = f"{oppose[i].phrase} ({oppose[i].score:.3f})" if i < len(oppose) else ""
        right = f"{support[i].phrase} ({support[i].score:.3f})" if i < len(support) else ""
        lines.append(f"{i + 1:<6}{left:<40}{right:<40}")
    return "\n".join(lines)


def write_interpretation_report(
    ranking: Dict[StanceLabel, List[RankedPhrase]],
    attributions: Dict[str, List[PhraseAttribution]],
    out_dir: Union[str, Path],
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "ranking.txt", format_ranking(ranking) + "\n")
    write_json(out_dir / "ranking.json", {
        label.value: [asdict(r) for r in ranked] for label, ranked in ranking.items()})
    write_jsonl(out_dir / "attributions.jsonl",
                (a.to_record() for pair_id in sorted(attributions) for a in attributions[pair_id]))
    logger.info(f"Wrote interpretation report to {out_dir}")
    return out_dir
