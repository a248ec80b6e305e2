"""
Command-Line Tests for Stancy

Tests the stancy commands end to end on the miniature dataset with the toy
encoder, plus the flat experiment configuration they share.
"""

import json
from pathlib import Path

import pytest

from src.cli.commands import EXIT_ERROR, EXIT_OK, EXIT_USAGE, run
from src.cli.experiment_config import (
    ENCODER_DIR_ENV,
    ExperimentConfig,
    default_values,
    parse_override,
)
from src.data.canonical_io import read_canonical, write_canonical
from src.data.records import Split
from src.model.stance_model import Variant
from src.training.train_config import BERT_GRID_BATCH_SIZES, BERT_GRID_LEARNING_RATES
from src.utils.errors import ConfigValidationError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
TOY_CONFIG = str(CONFIG_DIR / "toy_smoke.json")


@pytest.fixture
def dataset(tmp_path, toy_pairs):
    path = tmp_path / "pairs.jsonl"
    write_canonical(toy_pairs, path)
    return path


def train_toy(dataset, out_dir, variant="CONS"):
    code = run(["train", "--config", TOY_CONFIG, "--data", str(dataset), "--out", str(out_dir),
                "--set", f"train.variant={variant}", "--set", "train.epochs=1", "--no-progress"])
    assert code == EXIT_OK
    return out_dir / "best"


class TestArguments:
    """Test argument handling and exit codes."""

    def test_no_arguments(self, capsys):
        assert run([]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self):
        assert run(["summon"]) == EXIT_USAGE

    def test_missing_required_option(self):
        assert run(["predict", "--claim", "c", "--perspective", "p"]) == EXIT_USAGE


class TestDataCommands:
    """Test data ingest and data stats."""

    def test_ingest(self, perspectrum_dir, tmp_path, capsys):
        out = tmp_path / "canonical.jsonl"
        assert run(["data", "ingest", "--raw", str(perspectrum_dir), "--out", str(out)]) == EXIT_OK
        pairs = read_canonical(out)
        assert len(pairs) == 6
        assert "Total" in capsys.readouterr().out

    def test_ingest_missing_directory(self, tmp_path):
        code = run(["data", "ingest", "--raw", str(tmp_path / "absent"),
                    "--out", str(tmp_path / "out.jsonl")])
        assert code == EXIT_ERROR

    def test_stats_json(self, dataset, tmp_path, capsys):
        out = tmp_path / "stats.json"
        assert run(["data", "stats", "--in", str(dataset), "--out", str(out)]) == EXIT_OK
        rows = {row["split"]: row for row in json.loads(out.read_text())}
        assert rows["train"] == {"split": "train", "supporting": 1, "opposing": 1, "total": 2}
        assert rows["total"]["total"] == 6
        assert "Supporting Pairs" in capsys.readouterr().out

    def test_stats_missing_input(self, tmp_path, capsys):
        """A missing --in file is a diagnostic and exit 1, not a traceback."""
        missing = tmp_path / "absent.jsonl"
        assert run(["data", "stats", "--in", str(missing)]) == EXIT_ERROR
        assert str(missing) in capsys.readouterr().err

    def test_stats_unwritable_output(self, dataset, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory")
        code = run(["data", "stats", "--in", str(dataset), "--out", str(blocker / "stats.json")])
        assert code == EXIT_ERROR


class TestTrainCommand:
    """Test the train command with the toy encoder."""

    def test_writes_config_and_best(self, dataset, tmp_path):
        best = train_toy(dataset, tmp_path / "run")
        assert (best / "checkpoint.json").is_file()
        saved = json.loads((tmp_path / "run" / "config.json").read_text())
        assert saved["train.epochs"] == 1
        assert saved["encoder.name"] == "toy"
        assert saved["data.path"] == str(dataset)

    def test_saved_config_reproduces_run(self, dataset, tmp_path):
        """Feeding config.json back in gives the same loss trajectory."""
        train_toy(dataset, tmp_path / "first")
        code = run(["train", "--config", str(tmp_path / "first" / "config.json"),
                    "--out", str(tmp_path / "second"), "--no-progress"])
        assert code == EXIT_OK
        first = json.loads((tmp_path / "first" / "report.json").read_text())
        second = json.loads((tmp_path / "second" / "report.json").read_text())
        assert first["epoch_losses"] == second["epoch_losses"]

    def test_every_violation_reported(self, dataset, tmp_path, capsys):
        code = run(["train", "--data", str(dataset), "--out", str(tmp_path / "run"),
                    "--set", "train.learning_rate=-1", "--set", "train.epochs=0",
                    "--set", "bogus.key=1"])
        assert code == EXIT_ERROR
        err = capsys.readouterr().err
        assert "train.learning_rate" in err
        assert "train.epochs" in err
        assert "bogus.key" in err
        assert not (tmp_path / "run").exists()

    def test_missing_data_path(self, tmp_path):
        assert run(["train", "--config", TOY_CONFIG, "--out", str(tmp_path / "run")]) == EXIT_ERROR


class TestEvalAndCompare:
    """Test eval and compare."""

    def test_eval_is_deterministic(self, dataset, tmp_path):
        best = train_toy(dataset, tmp_path / "run")
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (first, second):
            assert run(["eval", "--checkpoint", str(best), "--data", str(dataset),
                        "--out", str(out)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        metrics = json.loads(Path(f"{first}.metrics.json").read_text())
        assert metrics["variant"] == "CONS"
        assert metrics["split"] == "test"
        assert "f1" in metrics["macro"]

    def test_eval_split_override(self, dataset, tmp_path):
        best = train_toy(dataset, tmp_path / "run")
        out = tmp_path / "dev.jsonl"
        assert run(["eval", "--checkpoint", str(best), "--data", str(dataset),
                    "--split", "dev", "--out", str(out)]) == EXIT_OK
        ids = [json.loads(line)["pair_id"] for line in out.read_text().splitlines()]
        assert ids == ["2_1", "2_2"]

    def test_eval_missing_checkpoint(self, dataset, tmp_path):
        code = run(["eval", "--checkpoint", str(tmp_path / "nowhere"), "--data", str(dataset),
                    "--out", str(tmp_path / "p.jsonl")])
        assert code == EXIT_ERROR

    def test_compare(self, dataset, tmp_path, capsys):
        base = train_toy(dataset, tmp_path / "base", variant="BASE")
        cons = train_toy(dataset, tmp_path / "cons", variant="CONS")
        for name, checkpoint in (("base", base), ("cons", cons)):
            assert run(["eval", "--checkpoint", str(checkpoint), "--data", str(dataset),
                        "--out", str(tmp_path / f"{name}.jsonl")]) == EXIT_OK
        capsys.readouterr()
        out = tmp_path / "compare.json"
        assert run(["compare", "--a", str(tmp_path / "base.jsonl"),
                    "--b", str(tmp_path / "cons.jsonl"), "--name-a", "BASE", "--name-b", "CONS",
                    "--out", str(out)]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "BASE" in printed and "CONS" in printed
        saved = json.loads(out.read_text())
        assert set(saved["systems"]) == {"BASE", "CONS"}
        assert saved["mcnemar"]["method"] == "exact-binomial"

    def test_compare_missing_predictions(self, tmp_path, capsys):
        code = run(["compare", "--a", str(tmp_path / "a.jsonl"), "--b", str(tmp_path / "b.jsonl")])
        assert code == EXIT_ERROR
        assert "a.jsonl" in capsys.readouterr().err


class TestInterpretAndPredict:
    """Test interpret and predict."""

    def test_interpret_report(self, dataset, tmp_path, capsys):
        best = train_toy(dataset, tmp_path / "run")
        report = tmp_path / "report"
        code = run(["interpret", "--checkpoint", str(best), "--data", str(dataset),
                    "--min-occurrences", "1", "--top-k", "3", "--out", str(report),
                    "--no-progress"])
        assert code == EXIT_OK
        ranking = json.loads((report / "ranking.json").read_text())
        assert set(ranking) == {"SUPPORT", "OPPOSE"}
        assert all(len(ranked) <= 3 for ranked in ranking.values())
        assert (report / "attributions.jsonl").read_text().strip()
        assert "Opposing Class" in capsys.readouterr().out

    def test_predict_cons_prints_cosine(self, dataset, tmp_path, capsys):
        best = train_toy(dataset, tmp_path / "run")
        capsys.readouterr()
        code = run(["predict", "--checkpoint", str(best), "--claim", "We should ban guns",
                    "--perspective", "Guns cause harm", "--json"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] in ("label: SUPPORT", "label: OPPOSE")
        assert lines[2].startswith("cosine: ")
        record = json.loads(lines[-1])
        assert sum(record["probs"]) == pytest.approx(1.0)
        assert -1.0 <= record["cosine"] <= 1.0

    def test_predict_base_omits_cosine(self, dataset, tmp_path, capsys):
        best = train_toy(dataset, tmp_path / "run", variant="BASE")
        capsys.readouterr()
        code = run(["predict", "--checkpoint", str(best), "--claim", "We should ban guns",
                    "--perspective", "Guns cause harm"])
        assert code == EXIT_OK
        assert "cosine" not in capsys.readouterr().out

    def test_predict_empty_perspective(self, dataset, tmp_path):
        best = train_toy(dataset, tmp_path / "run")
        code = run(["predict", "--checkpoint", str(best), "--claim", "We should ban guns",
                    "--perspective", "   "])
        assert code == EXIT_ERROR


class TestExperimentConfig:
    """Test the flat experiment configuration."""

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(ENCODER_DIR_ENV, raising=False)
        config = ExperimentConfig.from_flat({})
        assert config.train.variant is Variant.CONS
        assert config.eval_split is Split.TEST
        assert config.encoder.path is None
        assert config.min_occurrences == 2

    def test_encoder_dir_from_environment(self, monkeypatch):
        monkeypatch.setenv(ENCODER_DIR_ENV, "/models/bert-base-uncased")
        assert ExperimentConfig.from_flat({}).encoder.path == "/models/bert-base-uncased"
        explicit = ExperimentConfig.from_flat({"encoder.path": "/elsewhere"})
        assert explicit.encoder.path == "/elsewhere"

    def test_parse_override(self):
        assert parse_override("train.epochs=5") == ("train.epochs", 5)
        assert parse_override("train.grid.batch_size=[24, 32]") == ("train.grid.batch_size", [24, 32])
        assert parse_override("train.device=cpu") == ("train.device", "cpu")
        assert parse_override("lstm.embeddings_path=null") == ("lstm.embeddings_path", None)

    def test_type_and_semantic_violations_together(self):
        with pytest.raises(ConfigValidationError) as excinfo:
            ExperimentConfig.from_flat({"train.batch_size": "big", "train.epochs": 0,
                                        "train.variant": "MAGIC"})
        violations = excinfo.value.violations
        assert len(violations) == 3
        assert any("train.batch_size" in v for v in violations)

    def test_grid_must_hold_numbers(self):
        with pytest.raises(ConfigValidationError):
            ExperimentConfig.from_flat({"train.grid.learning_rate": ["fast"]})

    def test_save_and_load(self, tmp_path):
        config = ExperimentConfig.from_flat({"seed": 3, "train.device": "cpu"})
        config.save(tmp_path)
        loaded = ExperimentConfig.load(tmp_path / "config.json")
        assert loaded.to_flat() == config.to_flat()
        assert set(loaded.to_flat()) == set(default_values())

    def test_unreadable_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigValidationError):
            ExperimentConfig.load(path)

    @pytest.mark.parametrize("name", ["bert_base.json", "bert_cons.json", "lstm_baseline.json",
                                      "toy_smoke.json"])
    def test_shipped_configs_are_valid(self, name, monkeypatch):
        monkeypatch.delenv(ENCODER_DIR_ENV, raising=False)
        ExperimentConfig.load(CONFIG_DIR / name)

    def test_bert_grid(self):
        config = ExperimentConfig.load(CONFIG_DIR / "bert_base.json")
        assert config.train.variant is Variant.BASE
        assert config.train.grid_learning_rates == BERT_GRID_LEARNING_RATES
        assert config.train.grid_batch_sizes == BERT_GRID_BATCH_SIZES

    def test_lstm_uses_300d_glove_6b(self):
        config = ExperimentConfig.load(CONFIG_DIR / "lstm_baseline.json")
        assert config.train.variant is Variant.LSTM_BASELINE
        assert Path(config.train.embeddings_path).name == "glove.6B.300d.txt"
        assert config.train.embedding_dim == 300
