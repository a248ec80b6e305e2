"""
Stancy Commands

argparse front end for the toolkit: dataset ingestion and statistics,
grid-search training, evaluation, system comparison, phrase
interpretation and single-pair prediction. Exit codes are 0 on success,
1 for validation or runtime errors and 2 for usage errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.cli.experiment_config import ExperimentConfig, parse_override
from src.data.canonical_io import read_canonical, write_canonical
from src.data.perspectrum_processor import ingest_perspectrum
from src.data.records import (
    Split,
    StanceLabel,
    StancePair,
    compute_stats,
    filter_split,
    format_stats_table,
)
from src.encoder.encoder_service import load_encoder
from src.evaluation.metrics import compute_metrics, evaluate
from src.evaluation.predictions import predict_split, read_predictions, write_predictions
from src.evaluation.report_formatter import format_eval_table, format_mcnemar, format_results_table
from src.evaluation.significance import mcnemar
from src.interpret.phrase_attribution import (
    attribute_corpus,
    format_ranking,
    rank_phrases,
    write_interpretation_report,
)
from src.interpret.segmentation import SegmenterMode, load_chunker
from src.model.checkpoint_manager import load_checkpoint
from src.model.stance_model import Prediction, StancyModel, Variant
from src.training.trainer import TrainReport, train, train_lstm_baseline
from src.utils.errors import ConfigValidationError, InputError, StancyError, UsageError
from src.utils.io_utils import write_json
from src.utils.seeding import seed_everything

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _config_from_args(config_path: Optional[str], assignments: Sequence[str],
                      extra: Dict[str, Any]) -> ExperimentConfig:
    overrides: Dict[str, Any] = {}
    for assignment in assignments or []:
        key, value = parse_override(assignment)
        overrides[key] = value
    overrides.update({k: v for k, v in extra.items() if v is not None})
    return ExperimentConfig.load(config_path, overrides)


def _checkpoint_config(flat: Dict[str, Any]) -> ExperimentConfig:
    """Experiment config stored in a checkpoint; defaults if it is absent or stale."""
    try:
        return ExperimentConfig.from_flat(flat)
    except ConfigValidationError as e:
        logger.warning(f"Ignoring checkpoint config: {str(e)}")
        return ExperimentConfig.from_flat({})


# -- data ------------------------------------------------------------------

def cmd_data_ingest(args: argparse.Namespace) -> int:
    config = _config_from_args(args.config, args.set, {"data.raw_dir": args.raw})
    pairs = ingest_perspectrum(config.raw_dir, config.ingest)
    count = write_canonical(pairs, args.out)
    print(format_stats_table(compute_stats(pairs)))
    logger.info(f"Ingested {count} pairs into {args.out}")
    return EXIT_OK


def cmd_data_stats(args: argparse.Namespace) -> int:
    stats = compute_stats(read_canonical(args.input))
    print(format_stats_table(stats))
    if args.out:
        write_json(args.out, stats.to_records())
    return EXIT_OK


# -- training --------------------------------------------------------------

def _format_grid(report: TrainReport) -> str:
    lines = [f"{'grid':<6}{'lr':>10}{'batch':>8}{'best dev F1':>14}{'epoch':>7}  status"]
    for point in report.grid:
        f1 = f"{point.best_dev_macro_f1:.2f}" if point.best_dev_macro_f1 is not None else "-"
        epoch = point.best_epoch if point.best_epoch is not None else "-"
        marker = " *" if point.grid_index == report.grid_index else ""
        lines.append(f"{point.grid_index:<6}{point.learning_rate:>10.1e}{point.batch_size:>8}"
                     f"{f1:>14}{epoch:>7}  {point.status}{marker}")
    return "\n".join(lines)


def run_training(config: ExperimentConfig, pairs: Sequence[StancePair],
                 out_dir: Path, progress: bool = True) -> TrainReport:
    """Train the configured variant on the train split, selecting on dev."""
    train_pairs = filter_split(pairs, Split.TRAIN)
    dev_pairs = filter_split(pairs, Split.DEV)
    seed_everything(config.seed)
    flat = config.to_flat()

    if config.train.variant is Variant.LSTM_BASELINE:
        test_texts = [t for p in filter_split(pairs, Split.TEST)
                      for t in (p.claim_text, p.perspective_text)]
        return train_lstm_baseline(config.train, train_pairs, dev_pairs, out_dir, flat,
                                   extra_texts=test_texts, progress=progress)

    texts = [t for p in pairs for t in (p.claim_text, p.perspective_text)]

    def model_factory() -> StancyModel:
        encoder = load_encoder(config.encoder, texts, config.seed)
        return StancyModel(
            encoder,
            variant=config.train.variant,
            cos_weight=config.train.cos_weight,
            detach_cosine_feature=config.train.detach_cosine_feature,
        )

    return train(config.train, train_pairs, dev_pairs, model_factory, out_dir, flat, progress)


def cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args.config, args.set,
                               {"data.path": args.data, "output.dir": args.out})
    if not config.data_path or not config.output_dir:
        raise ConfigValidationError(["data.path and output.dir are required for training"])
    pairs = read_canonical(config.data_path)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.save(out_dir)

    report = run_training(config, pairs, out_dir, progress=not args.no_progress)
    print(_format_grid(report))
    print(f"Best checkpoint: {report.checkpoint_path}")
    return EXIT_OK


# -- evaluation ------------------------------------------------------------

def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    settings = _checkpoint_config(checkpoint.config)
    split = Split(args.split) if args.split else settings.eval_split
    pairs = filter_split(read_canonical(args.data), split)
    if not pairs:
        raise InputError(f"No {split.value} pairs in {args.data}")

    predictions = predict_split(checkpoint.model, pairs, batch_size=settings.train.eval_batch_size)
    write_predictions(predictions, args.out)
    report = evaluate(predictions, pairs)
    print(format_eval_table(report, name=checkpoint.variant.value))
    write_json(Path(f"{args.out}.metrics.json"), {
        "variant": checkpoint.variant.value,
        "split": split.value,
        "checkpoint": str(args.checkpoint),
        **report.to_record(),
    })
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    system_a = read_predictions(args.a)
    system_b = read_predictions(args.b)
    result = mcnemar(system_a, system_b)
    reports = {
        name: compute_metrics([r.gold for r in system.records], [r.predicted for r in system.records])
        for name, system in ((args.name_a, system_a), (args.name_b, system_b))
    }
    print(format_results_table(reports))
    print()
    print(format_mcnemar(result))
    if args.out:
        write_json(args.out, {
            "systems": {name: report.to_record() for name, report in reports.items()},
            "mcnemar": result.to_record(),
        })
    return EXIT_OK


# -- interpretation --------------------------------------------------------

def cmd_interpret(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    if not isinstance(checkpoint.model, StancyModel):
        raise UsageError("Interpretation needs a BASE or CONS checkpoint")
    settings = _checkpoint_config(checkpoint.config)
    mode = SegmenterMode(args.mode) if args.mode else settings.interpret_mode
    top_k = args.top_k if args.top_k is not None else settings.top_k
    min_occurrences = (args.min_occurrences if args.min_occurrences is not None
                       else settings.min_occurrences)
    chunker = load_chunker(args.chunker or settings.chunker)

    pairs = filter_split(read_canonical(args.data), Split(args.split))
    if args.limit is not None:
        pairs = pairs[: args.limit]
    if not pairs:
        raise InputError(f"No {args.split} pairs to interpret in {args.data}")

    attributions = attribute_corpus(
        checkpoint.model,
        pairs,
        mode=mode,
        chunker=chunker,
        max_workers=settings.max_workers,
        batch_size=settings.train.eval_batch_size,
        progress=not args.no_progress,
    )
    ranking = rank_phrases(
        [a for pair_attributions in attributions.values() for a in pair_attributions],
        top_k=top_k,
        min_occurrences=min_occurrences,
    )
    write_interpretation_report(ranking, attributions, args.out)
    print(format_ranking(ranking))
    return EXIT_OK


# -- prediction ------------------------------------------------------------

def predict(checkpoint_dir: str, claim: str, perspective: str) -> Prediction:
    """
    Classify one claim-perspective pair with a saved model.

    Raises:
        CheckpointLoadError: the checkpoint is missing or corrupt
    """
    checkpoint = load_checkpoint(checkpoint_dir)
    pair = StancePair.create(
        pair_id="input",
        claim_text=claim,
        perspective_text=perspective,
        label=StanceLabel.SUPPORT,
        split=Split.TEST,
    )
    return checkpoint.model.predict([pair], batch_size=1)[0]


def format_prediction(prediction: Prediction) -> str:
    lines = [
        f"label: {prediction.label.value}",
        f"probs: SUPPORT={prediction.probs[0]:.4f} OPPOSE={prediction.probs[1]:.4f}",
    ]
    if prediction.cosine is not None:
        lines.append(f"cosine: {prediction.cosine:.4f}")
    return "\n".join(lines)


def cmd_predict(args: argparse.Namespace) -> int:
    prediction = predict(args.checkpoint, args.claim, args.perspective)
    print(format_prediction(prediction))
    if args.json:
        record = {"label": prediction.label.value, "probs": list(prediction.probs)}
        if prediction.cosine is not None:
            record["cosine"] = prediction.cosine
        print(json.dumps(record))
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stancy",
        description="Stance classification of claim-perspective pairs.",
    )
    parser.add_argument("--log-level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="Override LOG_LEVEL for this run")
    commands = parser.add_subparsers(dest="command", metavar="<command>")
    commands.required = True

    data = commands.add_parser("data", help="Dataset ingestion and statistics")
    data_commands = data.add_subparsers(dest="data_command", metavar="<data command>")
    data_commands.required = True

    ingest = data_commands.add_parser("ingest", help="Convert released files to canonical JSONL")
    ingest.add_argument("--raw", required=True, help="Directory with the released JSON files")
    ingest.add_argument("--out", required=True, help="Canonical JSONL output path")
    ingest.add_argument("--config", help="Flat JSON experiment config (data.* keys)")
    ingest.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    ingest.set_defaults(handler=cmd_data_ingest)

    stats = data_commands.add_parser("stats", help="Per-split label counts")
    stats.add_argument("--in", dest="input", required=True, help="Canonical JSONL file")
    stats.add_argument("--out", help="Also write the table as JSON records")
    stats.set_defaults(handler=cmd_data_stats)

    train_cmd = commands.add_parser("train", help="Grid-search training of one variant")
    train_cmd.add_argument("--config", help="Flat JSON experiment config")
    train_cmd.add_argument("--data", help="Canonical JSONL file (overrides data.path)")
    train_cmd.add_argument("--out", help="Output directory (overrides output.dir)")
    train_cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="Override one config key; may be repeated")
    train_cmd.add_argument("--no-progress", action="store_true", help="Hide progress bars")
    train_cmd.set_defaults(handler=cmd_train)

    eval_cmd = commands.add_parser("eval", help="Predict a split and report metrics")
    eval_cmd.add_argument("--checkpoint", required=True)
    eval_cmd.add_argument("--data", required=True)
    eval_cmd.add_argument("--split", choices=[s.value for s in Split], default=None)
    eval_cmd.add_argument("--out", required=True, help="Prediction JSONL output path")
    eval_cmd.set_defaults(handler=cmd_eval)

    compare = commands.add_parser("compare", help="McNemar test between two prediction files")
    compare.add_argument("--a", required=True, help="Predictions of the first system")
    compare.add_argument("--b", required=True, help="Predictions of the second system")
    compare.add_argument("--name-a", default="A")
    compare.add_argument("--name-b", default="B")
    compare.add_argument("--out", help="Write the comparison as JSON")
    compare.set_defaults(handler=cmd_compare)

    interpret = commands.add_parser("interpret", help="Rank stance-bearing phrases")
    interpret.add_argument("--checkpoint", required=True)
    interpret.add_argument("--data", required=True)
    interpret.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)
    interpret.add_argument("--mode", choices=[m.value for m in SegmenterMode], default=None)
    interpret.add_argument("--top-k", type=int, default=None)
    interpret.add_argument("--min-occurrences", type=int, default=None)
    interpret.add_argument("--chunker", help="Chunker as package.module:callable")
    interpret.add_argument("--limit", type=int, default=None, help="Only the first N pairs")
    interpret.add_argument("--out", required=True, help="Report directory")
    interpret.add_argument("--no-progress", action="store_true")
    interpret.set_defaults(handler=cmd_interpret)

    predict_cmd = commands.add_parser("predict", help="Classify one claim-perspective pair")
    predict_cmd.add_argument("--checkpoint", required=True)
    predict_cmd.add_argument("--claim", required=True)
    predict_cmd.add_argument("--perspective", required=True)
    predict_cmd.add_argument("--json", action="store_true", help="Also print a JSON record")
    predict_cmd.set_defaults(handler=cmd_predict)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv and execute one command; returns the process exit code."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    if args.log_level:
        logging.getLogger().setLevel(getattr(logging, args.log_level))

    try:
        return args.handler(args)
    except UsageError as e:
        logger.error(f"Usage error: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigValidationError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_ERROR
    except StancyError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        logger.error(f"I/O error: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_ERROR
