"""
Perspective Segmentation

Splits a perspective into phrases: whitespace unigrams natively, or spans
from a pluggable shallow chunker. Every segmentation keeps the separators
between phrases so the original text can be rebuilt exactly.
"""

import importlib
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

from src.utils.errors import InputError, SetupError

logger = logging.getLogger(__name__)

Span = Tuple[int, int]
Chunker = Callable[[str], Sequence[Span]]

_TOKEN = re.compile(r"\S+")


class SegmenterMode(str, Enum):
    UNIGRAM = "unigram"
    SHALLOW_CHUNK = "chunk"


@dataclass(frozen=True)
class PhraseSegmentation:
    text: str
    spans: Tuple[Span, ...]
    segmenter: SegmenterMode

    @property
    def phrases(self) -> List[str]:
        return [self.text[start:end] for start, end in self.spans]

    def __len__(self) -> int:
        return len(self.spans)

    def prefix(self, i: int) -> str:
        """Perspective text up to and including phrase i (1-based); i=0 is empty."""
        if i == 0:
            return ""
        return self.text[: self.spans[i - 1][1]]

    def reconstruct(self) -> str:
        """Phrases joined with their original separators."""
        parts, cursor = [], 0
        for start, end in self.spans:
            parts.append(self.text[cursor:start])
            parts.append(self.text[start:end])
            cursor = end
        parts.append(self.text[cursor:])
        return "".join(parts)


def _unigram_spans(text: str) -> List[Span]:
    return [m.span() for m in _TOKEN.finditer(text)]


def _valid_spans(text: str, spans: Sequence[Span]) -> bool:
    cursor = 0
    for start, end in spans:
        if start < cursor or end <= start or end > len(text) or not text[start:end].strip():
            return False
        cursor = end
    return True


def segment(
    perspective: str,
    mode: SegmenterMode = SegmenterMode.UNIGRAM,
    chunker: Optional[Chunker] = None,
) -> PhraseSegmentation:
    """
    Segment a perspective into phrases.

    SHALLOW_CHUNK without a chunker, or with a chunker returning
    overlapping / empty spans, falls back to UNIGRAM.
    """
    if not perspective or not perspective.strip():
        raise InputError("cannot segment an empty perspective")
    mode = SegmenterMode(mode)

    if mode is SegmenterMode.SHALLOW_CHUNK:
        if chunker is None:
            logger.warning("No shallow chunker configured; falling back to unigrams")
        else:
            spans = sorted((int(s), int(e)) for s, e in chunker(perspective))
            if spans and _valid_spans(perspective, spans):
                return PhraseSegmentation(perspective, tuple(spans), mode)
            logger.warning("Chunker returned invalid spans; falling back to unigrams")

    return PhraseSegmentation(perspective, tuple(_unigram_spans(perspective)),
                              SegmenterMode.UNIGRAM)


def load_chunker(import_path: Optional[str]) -> Optional[Chunker]:
    """
    Resolve "package.module:callable" to a chunker.

    Raises:
        SetupError: the module or attribute cannot be imported
    """
    if not import_path:
        return None
    module_name, _, attribute = import_path.partition(":")
    if not attribute:
        raise SetupError(f"chunker must look like 'package.module:callable', got {import_path!r}")
    try:
        chunker = getattr(importlib.import_module(module_name), attribute)
    except (ImportError, AttributeError) as e:
        raise SetupError(f"Could not load chunker {import_path}: {str(e)}") from e
    if not callable(chunker):
        raise SetupError(f"chunker {import_path} is not callable")
    return chunker
