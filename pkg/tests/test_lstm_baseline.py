"""
LSTM Baseline Tests for Stancy

Tests the word vocabulary, embedding loading, model shapes and training
entry point of the bidirectional LSTM baseline.
"""

import pytest
import torch

from conftest import vocabulary_texts
from src.data.records import Split, filter_split
from src.model.lstm_baseline import LSTMStanceClassifier, WordVocabulary, load_word_embeddings
from src.model.stance_model import Variant
from src.training.train_config import TrainConfig
from src.training.trainer import train_lstm_baseline
from src.utils.errors import SetupError


@pytest.fixture
def embeddings_file(tmp_path):
    """A 4-dimensional GloVe-format table covering a few toy words."""
    rows = {
        "guns": [0.1, 0.2, 0.3, 0.4],
        "harm": [-0.5, 0.0, 0.5, 1.0],
        "privacy": [1.0, 1.0, -1.0, 0.0],
        "unrelated": [9.0, 9.0, 9.0, 9.0],
    }
    path = tmp_path / "vectors.txt"
    path.write_text("".join(f"{w} {' '.join(str(v) for v in vec)}\n" for w, vec in rows.items()))
    return path


class TestWordVocabulary:
    """Test the baseline vocabulary."""

    def test_reserved_ids(self):
        vocabulary = WordVocabulary.build(["Beta alpha"])
        assert vocabulary.words[:2] == ["<pad>", "<unk>"]
        assert vocabulary.encode("alpha beta") == [2, 3]

    def test_unknown_and_empty(self):
        vocabulary = WordVocabulary.build(["alpha"])
        assert vocabulary.encode("zeta") == [vocabulary.unk_id]
        assert vocabulary.encode("") == [vocabulary.unk_id]

    def test_max_tokens(self):
        vocabulary = WordVocabulary.build(["a b c d"])
        assert len(vocabulary.encode("a b c d", max_tokens=2)) == 2


class TestWordEmbeddings:
    """Test loading pretrained vectors."""

    def test_known_words_copied(self, toy_pairs, embeddings_file):
        vocabulary = WordVocabulary.build(vocabulary_texts(toy_pairs))
        matrix = load_word_embeddings(embeddings_file, vocabulary, dim=4, seed=0)
        assert matrix.shape == (len(vocabulary), 4)
        assert torch.allclose(matrix[vocabulary.index["harm"]],
                              torch.tensor([-0.5, 0.0, 0.5, 1.0]))
        assert torch.equal(matrix[vocabulary.pad_id], torch.zeros(4))

    def test_missing_words_seeded(self, toy_pairs, embeddings_file):
        vocabulary = WordVocabulary.build(vocabulary_texts(toy_pairs))
        a = load_word_embeddings(embeddings_file, vocabulary, dim=4, seed=1)
        b = load_word_embeddings(embeddings_file, vocabulary, dim=4, seed=1)
        assert torch.equal(a, b)

    def test_missing_table(self, tmp_path):
        with pytest.raises(SetupError):
            load_word_embeddings(tmp_path / "absent.txt", WordVocabulary.build(["a"]))
        with pytest.raises(SetupError):
            load_word_embeddings(None, WordVocabulary.build(["a"]))

    def test_dimension_mismatch(self, toy_pairs, embeddings_file):
        vocabulary = WordVocabulary.build(vocabulary_texts(toy_pairs))
        with pytest.raises(SetupError):
            load_word_embeddings(embeddings_file, vocabulary, dim=300)


class TestLSTMClassifier:
    """Test the baseline architecture."""

    def test_shapes(self, toy_pairs):
        """Two outputs over 4 x hidden concatenated features."""
        vocabulary = WordVocabulary.build(vocabulary_texts(toy_pairs))
        model = LSTMStanceClassifier(vocabulary, torch.randn(len(vocabulary), 6), hidden_size=5,
                                     dense_size=7)
        assert model.feature_size == 20
        assert model.classifier[0].in_features == 20
        assert model.classifier[-1].out_features == 2
        output = model(model.collate(toy_pairs))
        assert output.pair_repr.shape == (len(toy_pairs), 20)
        assert torch.allclose(output.probs.sum(dim=-1), torch.ones(len(toy_pairs)))

    def test_padding_does_not_change_predictions(self, toy_pairs):
        """Packed sequences ignore padding positions."""
        vocabulary = WordVocabulary.build(vocabulary_texts(toy_pairs))
        torch.manual_seed(0)
        model = LSTMStanceClassifier(vocabulary, torch.randn(len(vocabulary), 6), hidden_size=5)
        batched = model.predict(toy_pairs)
        for pair, prediction in zip(toy_pairs, batched):
            assert prediction.probs == pytest.approx(model.predict([pair])[0].probs, abs=1e-6)


class TestLSTMTraining:
    """Test train_lstm_baseline end to end."""

    def test_trains_and_reports(self, toy_pairs, embeddings_file, tmp_path):
        config = TrainConfig(learning_rate=1e-2, batch_size=2, epochs=2, device="cpu",
                             embeddings_path=str(embeddings_file), embedding_dim=4,
                             lstm_hidden_size=4, dense_size=8)
        best = train_lstm_baseline(config, filter_split(toy_pairs, Split.TRAIN),
                                   filter_split(toy_pairs, Split.DEV), tmp_path,
                                   extra_texts=["unrelated words"], progress=False)
        assert best.variant == Variant.LSTM_BASELINE.value
        assert len(best.epoch_losses) == 2
        assert (tmp_path / "best" / "baseline.pt").is_file()

    def test_missing_table_is_setup_error(self, toy_pairs, tmp_path):
        config = TrainConfig(embeddings_path=str(tmp_path / "absent.txt"), device="cpu")
        with pytest.raises(SetupError):
            train_lstm_baseline(config, filter_split(toy_pairs, Split.TRAIN),
                                filter_split(toy_pairs, Split.DEV), progress=False)
