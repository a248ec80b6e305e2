"""
Interpretation Tests for Stancy

Tests perspective segmentation, prefix-based phrase attribution and the
corpus-wide phrase ranking.
"""

import copy
import json
import random

import pytest
import torch

from conftest import vocabulary_texts
from src.data.perspectrum_processor import ingest_perspectrum
from src.data.records import StanceLabel
from src.interpret.phrase_attribution import (
    PhraseAttribution,
    attribute,
    attribute_corpus,
    phrase_key,
    rank_phrases,
    write_interpretation_report,
)
from src.interpret.segmentation import SegmenterMode, load_chunker, segment
from src.model.lstm_baseline import LSTMStanceClassifier, WordVocabulary
from src.model.stance_model import StancyModel, Variant
from src.utils.errors import ContractError, InputError, SetupError


def comma_chunker(text):
    """Spans between commas, trimmed."""
    spans, start = [], 0
    for piece in text.split(","):
        stripped = piece.strip()
        if stripped:
            offset = text.index(stripped, start)
            spans.append((offset, offset + len(stripped)))
            start = offset + len(stripped)
        else:
            start += len(piece)
        start += 1
    return spans


def attribution(phrase, delta, direction, pair_id="p"):
    shift = delta if direction is StanceLabel.SUPPORT else -delta
    return PhraseAttribution(pair_id=pair_id, phrase=phrase, index=1, delta=delta,
                             direction=direction, support_shift=shift)


@pytest.fixture
def cons_model(toy_encoder):
    return StancyModel(toy_encoder, Variant.CONS)


class TestSegmentation:
    """Test perspective segmentation."""

    def test_unigrams(self):
        assert segment("a b c", SegmenterMode.UNIGRAM).phrases == ["a", "b", "c"]

    def test_one_word_both_modes(self):
        assert segment("word", SegmenterMode.UNIGRAM).phrases == ["word"]
        assert segment("word", SegmenterMode.SHALLOW_CHUNK, comma_chunker).phrases == ["word"]

    def test_chunker_spans(self):
        seg = segment("they cannot vote, unlike adults", SegmenterMode.SHALLOW_CHUNK, comma_chunker)
        assert seg.segmenter is SegmenterMode.SHALLOW_CHUNK
        assert seg.phrases == ["they cannot vote", "unlike adults"]
        assert seg.prefix(1) == "they cannot vote"
        assert seg.prefix(0) == ""

    def test_missing_chunker_falls_back(self):
        seg = segment("a b", SegmenterMode.SHALLOW_CHUNK)
        assert seg.segmenter is SegmenterMode.UNIGRAM
        assert seg.phrases == ["a", "b"]

    def test_overlapping_spans_fall_back(self):
        seg = segment("a b", SegmenterMode.SHALLOW_CHUNK, lambda text: [(0, 3), (1, 3)])
        assert seg.segmenter is SegmenterMode.UNIGRAM

    def test_reconstruction(self):
        """Joining phrases with their separators rebuilds the text."""
        rng = random.Random(0)
        words = ["cannot", "unlike", "would", "improve", "privacy", ",", "."]
        for _ in range(200):
            text = "".join(rng.choice(words) + rng.choice([" ", "  ", "\t", ", "])
                           for _ in range(rng.randint(1, 12))).strip() or "x"
            for mode in SegmenterMode:
                seg = segment(text, mode, comma_chunker)
                assert seg.reconstruct() == text
            assert segment(text).prefix(len(segment(text))) == text

    @pytest.mark.integration
    def test_reconstruction_on_released_perspectives(self, released_perspectrum_dir):
        """The first 1000 distinct released perspectives rebuild exactly in both modes."""
        texts = list(dict.fromkeys(p.perspective_text for p in ingest_perspectrum(released_perspectrum_dir)))
        assert len(texts) >= 1000
        for text in texts[:1000]:
            for mode in SegmenterMode:
                seg = segment(text, mode, comma_chunker)
                assert seg.reconstruct() == text
                assert seg.prefix(len(seg)) == text

    def test_empty_perspective(self):
        with pytest.raises(InputError):
            segment("   ")

    def test_load_chunker(self):
        assert load_chunker(None) is None
        assert callable(load_chunker("test_interpret:comma_chunker"))
        with pytest.raises(SetupError):
            load_chunker("no_such_module_xyz:chunk")
        with pytest.raises(SetupError):
            load_chunker("missing_separator")


class TestAttribution:
    """Test prefix-based phrase attribution."""

    def test_one_attribution_per_phrase(self, cons_model, toy_pairs):
        pair = toy_pairs[3]
        seg = segment(pair.perspective_text)
        attributions = attribute(cons_model, pair, seg)
        assert [a.phrase for a in attributions] == seg.phrases
        assert [a.index for a in attributions] == list(range(1, len(seg) + 1))
        assert all(0.0 <= a.delta <= 1.0 for a in attributions)
        assert all(a.pair_id == pair.pair_id for a in attributions)

    def test_deterministic(self, cons_model, toy_pairs):
        pair = toy_pairs[0]
        seg = segment(pair.perspective_text)
        first = [a.delta for a in attribute(cons_model, pair, seg)]
        second = [a.delta for a in attribute(cons_model, pair, seg)]
        assert first == second

    def test_shifts_telescope(self, cons_model, toy_pairs):
        """Signed shifts sum to p_support(full) - p_support(empty)."""
        pair = toy_pairs[3]
        model = copy.deepcopy(cons_model).double()
        attributions = attribute(model, pair, segment(pair.perspective_text))
        empty, full = model.predict_texts(pair.claim_text, ["", pair.perspective_text])
        expected = full.support_probability - empty.support_probability
        assert sum(a.support_shift for a in attributions) == pytest.approx(expected, abs=1e-6)

    def test_direction_matches_shift_sign(self, cons_model, toy_pairs):
        for a in attribute(cons_model, toy_pairs[1], segment(toy_pairs[1].perspective_text)):
            assert a.delta == pytest.approx(abs(a.support_shift))
            expected = StanceLabel.SUPPORT if a.support_shift >= 0 else StanceLabel.OPPOSE
            assert a.direction is expected

    def test_lstm_model_rejected(self, toy_pairs):
        vocabulary = WordVocabulary.build(vocabulary_texts(toy_pairs))
        model = LSTMStanceClassifier(vocabulary, torch.randn(len(vocabulary), 4), hidden_size=3)
        with pytest.raises(ContractError):
            attribute(model, toy_pairs[0], segment(toy_pairs[0].perspective_text))

    def test_corpus_parallel_matches_serial(self, cons_model, toy_pairs):
        serial = attribute_corpus(cons_model, toy_pairs, max_workers=1, progress=False)
        parallel = attribute_corpus(cons_model, list(reversed(toy_pairs)), max_workers=3,
                                    progress=False)
        assert list(serial) == sorted(p.pair_id for p in toy_pairs)
        assert list(parallel) == list(serial)
        for pair_id in serial:
            assert [a.delta for a in serial[pair_id]] == pytest.approx(
                [a.delta for a in parallel[pair_id]], abs=1e-6)


class TestRanking:
    """Test corpus-wide phrase ranking."""

    def test_single_attribution_tops_its_class(self):
        ranking = rank_phrases([attribution("cannot", 0.4, StanceLabel.OPPOSE)], top_k=5,
                               min_occurrences=1)
        assert ranking[StanceLabel.OPPOSE][0].phrase == "cannot"
        assert ranking[StanceLabel.SUPPORT] == []

    def test_top_k_zero(self):
        ranking = rank_phrases([attribution("cannot", 0.4, StanceLabel.OPPOSE)], top_k=0,
                               min_occurrences=1)
        assert ranking == {StanceLabel.SUPPORT: [], StanceLabel.OPPOSE: []}

    def test_mean_delta_and_threshold(self):
        """Phrases rank by mean delta among those seen often enough."""
        attributions = [
            attribution("would improve", 0.2, StanceLabel.SUPPORT, "a"),
            attribution("Would improve,", 0.4, StanceLabel.SUPPORT, "b"),
            attribution("helps", 0.25, StanceLabel.SUPPORT, "c"),
            attribution("helps", 0.25, StanceLabel.SUPPORT, "d"),
            attribution("rare", 0.9, StanceLabel.SUPPORT, "e"),
        ]
        ranking = rank_phrases(attributions, top_k=10, min_occurrences=2)
        ranked = ranking[StanceLabel.SUPPORT]
        assert [r.phrase for r in ranked] == ["would improve", "helps"]
        assert ranked[0].score == pytest.approx(0.3)
        assert ranked[0].occurrences == 2

    def test_phrase_key(self):
        assert phrase_key("  Unlike, ") == "unlike"

    def test_report_files(self, tmp_path):
        attributions = {"p": [attribution("cannot", 0.4, StanceLabel.OPPOSE)]}
        ranking = rank_phrases(attributions["p"], top_k=5, min_occurrences=1)
        write_interpretation_report(ranking, attributions, tmp_path / "report")
        saved = json.loads((tmp_path / "report" / "ranking.json").read_text())
        assert saved["OPPOSE"][0]["phrase"] == "cannot"
        assert "cannot" in (tmp_path / "report" / "ranking.txt").read_text()
        lines = (tmp_path / "report" / "attributions.jsonl").read_text().splitlines()
        assert json.loads(lines[0])["direction"] == "OPPOSE"
