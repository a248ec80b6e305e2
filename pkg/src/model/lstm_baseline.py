"""
LSTM Baseline

Claim and perspective word embeddings run through one shared bidirectional
LSTM; the final forward and backward states of both texts are concatenated
and classified by two dense layers with a ReLU in between.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence
from transformers import BasicTokenizer

from src.data.records import StancePair
from src.model.losses import LossDiagnostics
from src.model.stance_model import (
    NUM_LABELS,
    StanceBatch,
    StanceClassifier,
    StanceOutput,
    Variant,
    labels_tensor,
)
from src.utils.errors import SetupError
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class WordVocabulary:
    """Lower-cased word index with padding at 0 and unknown at 1."""

    def __init__(self, words: Sequence[str]):
        self.words = [PAD_TOKEN, UNK_TOKEN] + [w for w in words if w not in (PAD_TOKEN, UNK_TOKEN)]
        self.index = {w: i for i, w in enumerate(self.words)}
        self._tokenizer = BasicTokenizer(do_lower_case=True)

    @classmethod
    def build(cls, texts: Iterable[str]) -> "WordVocabulary":
        basic = BasicTokenizer(do_lower_case=True)
        seen = set()
        for text in texts:
            seen.update(basic.tokenize(text))
        return cls(sorted(seen))

    def __len__(self) -> int:
        return len(self.words)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    def encode(self, text: str, max_tokens: Optional[int] = None) -> List[int]:
        ids = [self.index.get(w, self.unk_id) for w in self._tokenizer.tokenize(text)]
        if max_tokens is not None:
            ids = ids[:max_tokens]
        return ids or [self.unk_id]


def load_word_embeddings(
    path: Union[str, Path, None],
    vocabulary: WordVocabulary,
    dim: int = 300,
    seed: int = 0,
) -> torch.Tensor:
    """
    Build a (|V|, dim) embedding matrix from a GloVe-format text file.

    Words missing from the table get seeded normal(0, 0.1) vectors; the
    padding row is zero.

    Raises:
        SetupError: missing file or vectors of the wrong dimension
    """
    if not path or not Path(path).is_file():
        raise SetupError(f"Word embedding table not found: {path}")

    rng = np.random.default_rng(derive_seed(seed, "word_embeddings"))
    matrix = rng.normal(0.0, 0.1, size=(len(vocabulary), dim)).astype(np.float32)
    matrix[vocabulary.pad_id] = 0.0
    found = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            parts = line.rstrip().split(" ")
            if len(parts) < 2:
                continue
            word, values = parts[0], parts[1:]
            row = vocabulary.index.get(word)
            if row is None:
                continue
            if len(values) != dim:
                raise SetupError(
                    f"{path}:{line_number}: expected {dim}-dimensional vectors, got {len(values)}")
            matrix[row] = np.asarray(values, dtype=np.float32)
            found += 1

    logger.info(f"Loaded {found}/{len(vocabulary) - 2} vocabulary vectors from {path}")
    return torch.from_numpy(matrix)


class LSTMStanceClassifier(StanceClassifier):
    """Bidirectional LSTM baseline over pretrained word embeddings."""

    variant = Variant.LSTM_BASELINE

    def __init__(
        self,
        vocabulary: WordVocabulary,
        embeddings: torch.Tensor,
        hidden_size: int = 128,
        dense_size: int = 256,
        max_tokens: int = 128,
    ):
        super().__init__()
        self.vocabulary = vocabulary
        self.hidden_size = hidden_size
        self.dense_size = dense_size
        self.max_tokens = max_tokens
        self.embedding = nn.Embedding.from_pretrained(
            embeddings, freeze=False, padding_idx=vocabulary.pad_id)
        self.lstm = nn.LSTM(embeddings.shape[1], hidden_size, batch_first=True, bidirectional=True)
        self.classifier = nn.Sequential(
            nn.Linear(self.feature_size, dense_size),
            nn.ReLU(),
            nn.Linear(dense_size, NUM_LABELS),
        )
        self.diagnostics = LossDiagnostics()
        logger.info(f"LSTM baseline initialized: vocab={len(vocabulary)}, hidden={hidden_size}")

    @property
    def embedding_dim(self) -> int:
        return int(self.embedding.weight.shape[1])

    @property
    def feature_size(self) -> int:
        # two directions x two texts
        return 4 * self.hidden_size

    def _pad(self, sequences: List[List[int]]) -> Dict[str, torch.Tensor]:
        longest = max(len(s) for s in sequences)
        ids = torch.full((len(sequences), longest), self.vocabulary.pad_id, dtype=torch.long)
        for row, seq in enumerate(sequences):
            ids[row, :len(seq)] = torch.tensor(seq, dtype=torch.long)
        return {"ids": ids, "lengths": torch.tensor([len(s) for s in sequences])}

    def collate(self, pairs: Sequence[StancePair]) -> StanceBatch:
        claims = self._pad([self.vocabulary.encode(p.claim_text, self.max_tokens) for p in pairs])
        perspectives = self._pad(
            [self.vocabulary.encode(p.perspective_text, self.max_tokens) for p in pairs])
        return StanceBatch(
            pair_inputs={
                "claim_ids": claims["ids"],
                "claim_lengths": claims["lengths"],
                "perspective_ids": perspectives["ids"],
                "perspective_lengths": perspectives["lengths"],
            },
            labels=labels_tensor(pairs),
            pair_ids=[p.pair_id for p in pairs],
        )

    def _encode_text(self, ids: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        embedded = self.embedding(ids.to(self.device))
        packed = pack_padded_sequence(embedded, lengths.cpu(), batch_first=True,
                                      enforce_sorted=False)
        _, (h_n, _) = self.lstm(packed)
        return torch.cat([h_n[-2], h_n[-1]], dim=-1)

    def forward(self, batch: StanceBatch) -> StanceOutput:
        inputs = batch.pair_inputs
        claim = self._encode_text(inputs["claim_ids"], inputs["claim_lengths"])
        perspective = self._encode_text(inputs["perspective_ids"], inputs["perspective_lengths"])
        features = torch.cat([claim, perspective], dim=-1)
        logits = self.classifier(features)
        return StanceOutput(logits=logits, probs=F.softmax(logits, dim=-1), pair_repr=features)
