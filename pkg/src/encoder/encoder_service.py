"""
Contextual Encoder Service

Wraps a bidirectional transformer encoder behind one interface: WordPiece
tokenization, [CLS] claim [SEP] perspective [SEP] packing, and the
position-0 last-layer hidden state as the pooled representation.

Two backends share the interface: a pretrained encoder loaded from a local
directory, and a small randomly initialised BERT over a word-level
vocabulary used for tests and CI.
"""

import json
import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import torch
from tokenizers import Tokenizer, decoders, models, normalizers, pre_tokenizers
from torch import nn
from transformers import (
    AutoConfig,
    AutoModel,
    AutoTokenizer,
    BasicTokenizer,
    BertConfig,
    BertModel,
    PreTrainedModel,
    PreTrainedTokenizerBase,
    PreTrainedTokenizerFast,
)

from src.data.records import normalize_text
from src.utils.errors import ContractError, InputError, NumericalDegeneracyError, SetupError
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

SPEC_FILE = "encoder_spec.json"
TOY_SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


@dataclass
class EncoderMetrics:
    """Counters fed by the packing functions."""

    truncated_sequences: int = 0
    dropped_tokens: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __getstate__(self) -> dict:
        state = self.__dict__.copy()
        state.pop("_lock", None)
        return state

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def record_truncation(self, dropped: int) -> None:
        with self._lock:
            self.truncated_sequences += 1
            self.dropped_tokens += dropped


@dataclass
class EncoderSpec:
    """Shape of the encoder plus its subword vocabulary handle."""

    layers: int
    hidden_size: int
    attention_heads: int
    max_sequence_length: int = 512
    vocabulary: Optional[PreTrainedTokenizerBase] = field(default=None, repr=False, compare=False)
    pretrained: bool = True
    metrics: EncoderMetrics = field(default_factory=EncoderMetrics, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.hidden_size <= 0:
            raise InputError(f"hidden_size must be positive, got {self.hidden_size}")
        if self.max_sequence_length < 3:
            raise InputError(
                f"max_sequence_length must be at least 3, got {self.max_sequence_length}")

    def to_dict(self) -> Dict[str, Union[int, bool]]:
        return {
            "layers": self.layers,
            "hidden_size": self.hidden_size,
            "attention_heads": self.attention_heads,
            "max_sequence_length": self.max_sequence_length,
            "pretrained": self.pretrained,
        }

    def _tokenizer(self) -> PreTrainedTokenizerBase:
        if self.vocabulary is None:
            raise ContractError("EncoderSpec has no vocabulary attached")
        return self.vocabulary

    @property
    def cls_token_id(self) -> int:
        return int(self._tokenizer().cls_token_id)

    @property
    def sep_token_id(self) -> int:
        return int(self._tokenizer().sep_token_id)

    @property
    def pad_token_id(self) -> int:
        pad = self._tokenizer().pad_token_id
        return 0 if pad is None else int(pad)

    def tokenize(self, text: str) -> List[int]:
        tokenizer = self._tokenizer()
        return list(tokenizer.convert_tokens_to_ids(tokenizer.tokenize(text)))


@dataclass(frozen=True)
class PackedSequence:
    token_ids: Tuple[int, ...]
    segment_ids: Tuple[int, ...]
    attention_mask: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.token_ids) == len(self.segment_ids) == len(self.attention_mask)):
            raise ContractError("PackedSequence fields must have equal length")

    def __len__(self) -> int:
        return len(self.token_ids)


@dataclass(frozen=True)
class PooledRepresentation:
    """Last-layer hidden state at the classification position."""

    vector: torch.Tensor

    def __post_init__(self) -> None:
        if self.vector.dim() != 1:
            raise ContractError(f"pooled vector must be 1-D, got shape {tuple(self.vector.shape)}")
        if not torch.isfinite(self.vector).all():
            raise NumericalDegeneracyError("pooled representation has non-finite entries")

    def __len__(self) -> int:
        return int(self.vector.shape[0])


def pack_pair(
    claim: str,
    perspective: str,
    spec: EncoderSpec,
    allow_empty_perspective: bool = False,
) -> PackedSequence:
    """
    Pack [CLS] claim [SEP] perspective [SEP].

    When the pair exceeds spec.max_sequence_length the perspective tail is
    cut first, then the claim tail; both separators always survive.
    allow_empty_perspective is only for the empty-prefix attribution case,
    which packs as [CLS] claim [SEP] [SEP].
    """
    if not normalize_text(claim):
        raise InputError("claim text is empty")
    if not normalize_text(perspective) and not allow_empty_perspective:
        raise InputError("perspective text is empty")

    claim_ids = spec.tokenize(claim)
    perspective_ids = spec.tokenize(perspective) if normalize_text(perspective) else []

    overflow = len(claim_ids) + len(perspective_ids) - (spec.max_sequence_length - 3)
    if overflow > 0:
        dropped = overflow
        cut = min(overflow, len(perspective_ids))
        perspective_ids = perspective_ids[: len(perspective_ids) - cut]
        overflow -= cut
        if overflow > 0:
            claim_ids = claim_ids[: len(claim_ids) - overflow]
        spec.metrics.record_truncation(dropped)
        logger.debug(f"Truncated pair by {dropped} tokens")

    token_ids = [spec.cls_token_id, *claim_ids, spec.sep_token_id,
                 *perspective_ids, spec.sep_token_id]
    segment_ids = [0] * (len(claim_ids) + 2) + [1] * (len(perspective_ids) + 1)
    return PackedSequence(tuple(token_ids), tuple(segment_ids), (1,) * len(token_ids))


def pack_claim_only(claim: str, spec: EncoderSpec) -> PackedSequence:
    """Pack [CLS] claim [SEP] with every segment id 0."""
    if not normalize_text(claim):
        raise InputError("claim text is empty")
    claim_ids = spec.tokenize(claim)
    overflow = len(claim_ids) - (spec.max_sequence_length - 2)
    if overflow > 0:
        claim_ids = claim_ids[: len(claim_ids) - overflow]
        spec.metrics.record_truncation(overflow)
    token_ids = [spec.cls_token_id, *claim_ids, spec.sep_token_id]
    return PackedSequence(tuple(token_ids), (0,) * len(token_ids), (1,) * len(token_ids))


class ContextualEncoder(nn.Module):
    """
    Transformer encoder exposing the classification-position representation.

    All backbone parameters stay trainable; gradients flow through
    encode_batch for fine-tuning.
    """

    def __init__(self, backbone: PreTrainedModel, spec: EncoderSpec):
        super().__init__()
        if spec.vocabulary is None:
            raise ContractError("ContextualEncoder needs an EncoderSpec with a vocabulary")
        self.backbone = backbone
        self.spec = spec
        self.use_segments = getattr(backbone.config, "type_vocab_size", 1) > 1
        logger.info(
            f"Contextual encoder initialized: layers={spec.layers}, H={spec.hidden_size}, "
            f"heads={spec.attention_heads}, pretrained={spec.pretrained}"
        )

    @property
    def hidden_size(self) -> int:
        return self.spec.hidden_size

    @property
    def device(self) -> torch.device:
        return next(self.parameters()).device

    def pack_pair(self, claim: str, perspective: str,
                  allow_empty_perspective: bool = False) -> PackedSequence:
        return pack_pair(claim, perspective, self.spec, allow_empty_perspective)

    def pack_claim_only(self, claim: str) -> PackedSequence:
        return pack_claim_only(claim, self.spec)

    def collate(self, seqs: Sequence[PackedSequence]) -> Dict[str, torch.Tensor]:
        """Right-pad a batch of packed sequences into tensors."""
        if not seqs:
            raise ContractError("cannot collate an empty batch")
        longest = max(len(s) for s in seqs)
        if longest > self.spec.max_sequence_length:
            raise ContractError(
                f"sequence of length {longest} exceeds max_sequence_length "
                f"{self.spec.max_sequence_length}")
        pad = self.spec.pad_token_id
        input_ids = torch.full((len(seqs), longest), pad, dtype=torch.long)
        token_type_ids = torch.zeros((len(seqs), longest), dtype=torch.long)
        attention_mask = torch.zeros((len(seqs), longest), dtype=torch.long)
        for row, seq in enumerate(seqs):
            n = len(seq)
            input_ids[row, :n] = torch.tensor(seq.token_ids, dtype=torch.long)
            token_type_ids[row, :n] = torch.tensor(seq.segment_ids, dtype=torch.long)
            attention_mask[row, :n] = torch.tensor(seq.attention_mask, dtype=torch.long)
        inputs = {"input_ids": input_ids, "attention_mask": attention_mask}
        if self.use_segments:
            inputs["token_type_ids"] = token_type_ids
        return inputs

    def forward(self, inputs: Dict[str, torch.Tensor]) -> torch.Tensor:
        """Return the (B, H) position-0 hidden states for collated inputs."""
        inputs = {k: v.to(self.device) for k, v in inputs.items()}
        outputs = self.backbone(**inputs)
        return outputs.last_hidden_state[:, 0, :]

    def encode_batch(self, seqs: Sequence[PackedSequence]) -> torch.Tensor:
        return self(self.collate(seqs))

    def encode(self, seq: PackedSequence) -> PooledRepresentation:
        return PooledRepresentation(self.encode_batch([seq])[0])

    def save(self, directory: Union[str, Path]) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.backbone.save_pretrained(directory)
        self.spec.vocabulary.save_pretrained(directory)
        with open(directory / SPEC_FILE, "w", encoding="utf-8") as fh:
            json.dump(self.spec.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "ContextualEncoder":
        """Reload an encoder written by save()."""
        directory = Path(directory)
        with open(directory / SPEC_FILE, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        backbone = _load_backbone(directory)
        if payload.get("pretrained", True):
            tokenizer = AutoTokenizer.from_pretrained(directory)
        else:
            tokenizer = PreTrainedTokenizerFast.from_pretrained(directory)
            _check_vocabulary(tokenizer, backbone.config.vocab_size)
        spec = EncoderSpec(vocabulary=tokenizer, **payload)
        return cls(backbone, spec)


def encode(seq: PackedSequence, encoder: ContextualEncoder) -> PooledRepresentation:
    """Pooled representation of one packed sequence (gradients preserved)."""
    return encoder.encode(seq)


def _load_backbone(path: Path) -> PreTrainedModel:
    config = AutoConfig.from_pretrained(path)
    kwargs = {"add_pooling_layer": False} if config.model_type == "bert" else {}
    return AutoModel.from_pretrained(path, **kwargs)


def load_pretrained_encoder(
    path: Union[str, Path],
    max_sequence_length: int = 512,
) -> ContextualEncoder:
    """
    Load a pretrained encoder from a local directory (no network access).

    Raises:
        SetupError: if the directory is missing or not a model directory
    """
    if not path:
        raise SetupError("encoder.path is not set and STANCY_ENCODER_DIR is empty")
    path = Path(path)
    if not path.is_dir():
        raise SetupError(f"Encoder directory not found: {path}")
    try:
        tokenizer = AutoTokenizer.from_pretrained(path, local_files_only=True)
        backbone = _load_backbone(path)
    except (OSError, ValueError) as e:
        raise SetupError(f"Could not load encoder from {path}: {str(e)}") from e

    config = backbone.config
    limit = getattr(config, "max_position_embeddings", max_sequence_length)
    spec = EncoderSpec(
        layers=config.num_hidden_layers,
        hidden_size=config.hidden_size,
        attention_heads=config.num_attention_heads,
        max_sequence_length=min(max_sequence_length, limit),
        vocabulary=tokenizer,
        pretrained=True,
    )
    return ContextualEncoder(backbone, spec)


def build_word_vocabulary(texts: Iterable[str]) -> List[str]:
    """Lower-cased word vocabulary (special tokens first, then sorted words)."""
    basic = BasicTokenizer(do_lower_case=True)
    words = Counter()
    for text in texts:
        words.update(basic.tokenize(text))
    return TOY_SPECIAL_TOKENS + sorted(w for w in words if w not in TOY_SPECIAL_TOKENS)


def _check_vocabulary(tokenizer: PreTrainedTokenizerBase, expected_size: int) -> None:
    if len(tokenizer) != expected_size:
        raise SetupError(
            f"toy tokenizer holds {len(tokenizer)} tokens, expected {expected_size}")


def build_word_tokenizer(vocabulary: Sequence[str]) -> PreTrainedTokenizerFast:
    """
    WordPiece tokenizer over an in-memory word vocabulary.

    Raises:
        SetupError: if the tokenizer does not map every word to its own id
    """
    index = {word: i for i, word in enumerate(vocabulary)}
    backend = Tokenizer(models.WordPiece(vocab=index, unk_token="[UNK]"))
    backend.normalizer = normalizers.BertNormalizer(lowercase=True)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.decoder = decoders.WordPiece()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    _check_vocabulary(tokenizer, len(vocabulary))
    if tokenizer.convert_tokens_to_ids(list(vocabulary)) != list(range(len(vocabulary))):
        raise SetupError("toy tokenizer ids do not follow the vocabulary order")
    return tokenizer


def build_toy_encoder(
    texts: Iterable[str],
    seed: int,
    layers: int = 2,
    hidden_size: int = 32,
    attention_heads: int = 2,
    max_sequence_length: int = 128,
) -> ContextualEncoder:
    """
    Small randomly initialised BERT over a word-level vocabulary.

    Dropout is disabled so training and inference are deterministic under
    a fixed seed.
    """
    vocabulary = build_word_vocabulary(texts)
    tokenizer = build_word_tokenizer(vocabulary)

    config = BertConfig(
        vocab_size=len(vocabulary),
        hidden_size=hidden_size,
        num_hidden_layers=layers,
        num_attention_heads=attention_heads,
        intermediate_size=4 * hidden_size,
        max_position_embeddings=max_sequence_length,
        type_vocab_size=2,
        hidden_dropout_prob=0.0,
        attention_probs_dropout_prob=0.0,
    )
    torch.manual_seed(derive_seed(seed, "encoder_init"))
    backbone = BertModel(config, add_pooling_layer=False)
    spec = EncoderSpec(
        layers=layers,
        hidden_size=hidden_size,
        attention_heads=attention_heads,
        max_sequence_length=max_sequence_length,
        vocabulary=tokenizer,
        pretrained=False,
    )
    logger.info(f"Built toy encoder with a {len(vocabulary)}-word vocabulary")
    return ContextualEncoder(backbone, spec)


@dataclass
class EncoderSettings:
    """Encoder selection as it appears in the experiment config."""

    name: str = "pretrained"
    path: Optional[str] = None
    max_sequence_length: int = 512
    toy_layers: int = 2
    toy_hidden_size: int = 32
    toy_attention_heads: int = 2

    def validate(self) -> List[str]:
        violations = []
        if self.name not in ("pretrained", "toy"):
            violations.append(f"encoder.name must be 'pretrained' or 'toy', got {self.name!r}")
        if self.max_sequence_length < 3:
            violations.append("encoder.max_sequence_length must be at least 3")
        if self.toy_hidden_size <= 0 or self.toy_layers <= 0 or self.toy_attention_heads <= 0:
            violations.append("encoder.toy.* sizes must be positive")
        elif self.toy_hidden_size % self.toy_attention_heads:
            violations.append("encoder.toy.hidden_size must be divisible by encoder.toy.attention_heads")
        return violations


def load_encoder(settings: EncoderSettings, texts: Iterable[str], seed: int) -> ContextualEncoder:
    """Build the configured encoder; texts feed the toy vocabulary only."""
    if settings.name == "toy":
        return build_toy_encoder(
            texts,
            seed=seed,
            layers=settings.toy_layers,
            hidden_size=settings.toy_hidden_size,
            attention_heads=settings.toy_attention_heads,
            max_sequence_length=settings.max_sequence_length,
        )
    return load_pretrained_encoder(settings.path, settings.max_sequence_length)
