"""
Stance Trainer

Grid search over (learning rate, batch size). Each grid point trains a
fresh model with Adam, reshuffles the training split every epoch from a
seeded generator, evaluates dev macro-F1 after every epoch and keeps the
best-dev checkpoint. The grid-wide winner is copied to <out>/best/.
"""

import copy
import logging
import math
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import torch
from torch.utils.data import DataLoader
from tqdm import tqdm
from transformers import get_constant_schedule, get_linear_schedule_with_warmup

from src.data.records import StancePair
from src.evaluation.metrics import evaluate
from src.model.checkpoint_manager import save_checkpoint
from src.model.lstm_baseline import LSTMStanceClassifier, WordVocabulary, load_word_embeddings
from src.model.stance_model import StanceClassifier, Variant
from src.training.train_config import TrainConfig
from src.utils.errors import (
    ConfigValidationError,
    DivergenceError,
    InputError,
    NumericalDegeneracyError,
    TrainingError,
)
from src.utils.io_utils import replace_directory, staging_directory, write_json
from src.utils.seeding import derive_seed, seed_everything

logger = logging.getLogger(__name__)

ModelFactory = Callable[[], StanceClassifier]


@dataclass
class EpochLoss:
    epoch: int
    ce: float
    cos: float
    joint: float


@dataclass
class TrainReport:
    """Outcome of one grid point; the report returned by train() also lists the grid."""

    grid_index: int
    variant: str
    learning_rate: float
    batch_size: int
    epoch_losses: List[EpochLoss] = field(default_factory=list)
    dev_macro_f1: List[float] = field(default_factory=list)
    dev_accuracy: List[float] = field(default_factory=list)
    best_dev_macro_f1: Optional[float] = None
    best_epoch: Optional[int] = None
    steps: int = 0
    status: str = "ok"
    error: Optional[str] = None
    checkpoint_path: Optional[str] = None
    optimizer_settings: Dict[str, Any] = field(default_factory=dict)
    grid: List["TrainReport"] = field(default_factory=list, repr=False)

    @property
    def succeeded(self) -> bool:
        return self.status == "ok" and self.best_dev_macro_f1 is not None

    def to_record(self) -> Dict[str, Any]:
        record = {
            "grid_index": self.grid_index,
            "variant": self.variant,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epoch_losses": [vars(e) for e in self.epoch_losses],
            "dev_macro_f1": self.dev_macro_f1,
            "dev_accuracy": self.dev_accuracy,
            "best_dev_macro_f1": self.best_dev_macro_f1,
            "best_epoch": self.best_epoch,
            "steps": self.steps,
            "status": self.status,
            "error": self.error,
            "checkpoint_path": self.checkpoint_path,
            "optimizer_settings": self.optimizer_settings,
        }
        if self.grid:
            record["grid"] = [r.to_record() for r in self.grid]
        return record


def _selection_key(report: TrainReport) -> Tuple[float, float, int]:
    # higher dev F1, then lower learning rate, then smaller batch
    return (report.best_dev_macro_f1, -report.learning_rate, -report.batch_size)


def select_best(reports: Sequence[TrainReport]) -> TrainReport:
    """
    Report with the highest dev macro-F1 among successful grid points.

    Raises:
        TrainingError: no grid point succeeded
    """
    successful = [r for r in reports if r.succeeded]
    if not successful:
        raise TrainingError("No grid point finished successfully")
    return max(successful, key=_selection_key)


class StanceTrainer:
    """
    Runs the grid search for one variant.

    Args:
        config: Training configuration
        model_factory: Returns a freshly initialised model for each grid point
        output_dir: Where grid-<i>/, best/ and report.json go (None keeps
            everything in memory)
        checkpoint_config: Flat experiment config stored inside checkpoints
        progress: Show tqdm bars
    """

    def __init__(
        self,
        config: TrainConfig,
        model_factory: ModelFactory,
        output_dir: Optional[Union[str, Path]] = None,
        checkpoint_config: Optional[Dict[str, Any]] = None,
        progress: bool = True,
    ):
        violations = config.validate()
        if violations:
            raise ConfigValidationError(violations)
        self.config = config
        self.model_factory = model_factory
        self.output_dir = Path(output_dir) if output_dir else None
        self.checkpoint_config = checkpoint_config or {}
        self.progress = progress
        self.device = config.resolve_device()
        self.best_model: Optional[StanceClassifier] = None
        logger.info(
            f"Stance trainer initialized: variant={config.variant.value}, "
            f"{len(config.grid_points())} grid point(s), device={self.device}"
        )

    def train(self, train_pairs: Sequence[StancePair], dev_pairs: Sequence[StancePair]) -> TrainReport:
        if not train_pairs or not dev_pairs:
            raise InputError("training and dev splits must be non-empty")

        reports: List[TrainReport] = []
        best_key = None
        for index, (lr, batch_size) in enumerate(self.config.grid_points()):
            report, model = self._run_grid_point(index, lr, batch_size, train_pairs, dev_pairs)
            reports.append(report)
            if report.succeeded and (best_key is None or _selection_key(report) > best_key):
                best_key = _selection_key(report)
                self.best_model = model

        best = replace(select_best(reports), grid=reports)
        if self.output_dir is not None:
            if best.checkpoint_path:
                target = self.output_dir / "best"
                staging = staging_directory(target)
                shutil.rmtree(staging)
                shutil.copytree(best.checkpoint_path, staging)
                replace_directory(staging, target)
                best.checkpoint_path = str(target)
            write_json(self.output_dir / "report.json", best.to_record())
        logger.info(
            f"Selected lr={best.learning_rate:g}, batch={best.batch_size} "
            f"with dev macro-F1 {best.best_dev_macro_f1:.2f}"
        )
        return best

    def _run_grid_point(
        self,
        index: int,
        learning_rate: float,
        batch_size: int,
        train_pairs: Sequence[StancePair],
        dev_pairs: Sequence[StancePair],
    ) -> Tuple[TrainReport, Optional[StanceClassifier]]:
        config = self.config
        report = TrainReport(grid_index=index, variant=config.variant.value,
                             learning_rate=learning_rate, batch_size=batch_size)
        logger.info(f"Grid point {index}: lr={learning_rate:g}, batch={batch_size}")

        seed_everything(config.seed, f"grid-{index}")
        model = self.model_factory().to(self.device)
        optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
        steps_per_epoch = math.ceil(len(train_pairs) / batch_size)
        total_steps = steps_per_epoch * config.epochs
        if config.linear_warmup:
            scheduler = get_linear_schedule_with_warmup(
                optimizer, int(config.warmup_ratio * total_steps), total_steps)
        else:
            scheduler = get_constant_schedule(optimizer)
        report.optimizer_settings = {
            "name": "adam",
            **{k: optimizer.defaults[k] for k in ("lr", "betas", "eps", "weight_decay", "amsgrad")},
            "grad_clip_norm": config.grad_clip_norm,
            "schedule": "linear-warmup" if config.linear_warmup else "constant",
            "warmup_ratio": config.warmup_ratio if config.linear_warmup else 0.0,
        }

        generator = torch.Generator().manual_seed(derive_seed(config.seed, "shuffle"))
        loader = DataLoader(
            list(train_pairs),
            batch_size=batch_size,
            shuffle=True,
            generator=generator,
            collate_fn=model.collate,
            num_workers=config.num_workers,
        )
        checkpoint_dir = self.output_dir / f"grid-{index}" if self.output_dir else None
        best_state = None

        try:
            for epoch in range(1, config.epochs + 1):
                losses = self._run_epoch(model, optimizer, scheduler, loader, report, epoch)
                report.epoch_losses.append(losses)

                dev_report = evaluate(model, dev_pairs, batch_size=config.eval_batch_size)
                report.dev_macro_f1.append(dev_report.macro_f1)
                report.dev_accuracy.append(dev_report.accuracy)
                logger.info(
                    f"Grid {index} epoch {epoch}: joint={losses.joint:.4f} ce={losses.ce:.4f} "
                    f"cos={losses.cos:.4f} dev macro-F1={dev_report.macro_f1:.2f}"
                )
                if report.best_dev_macro_f1 is None or dev_report.macro_f1 > report.best_dev_macro_f1:
                    report.best_dev_macro_f1 = dev_report.macro_f1
                    report.best_epoch = epoch
                    if checkpoint_dir is not None:
                        save_checkpoint(model, checkpoint_dir, self.checkpoint_config)
                        report.checkpoint_path = str(checkpoint_dir)
                    best_state = copy.deepcopy(model.state_dict())
        except (DivergenceError, NumericalDegeneracyError) as e:
            report.status = "failed"
            report.error = str(e)
            logger.error(f"Grid point {index} failed: {str(e)}")
            return report, None

        if best_state is not None:
            model.load_state_dict(best_state)
        model.eval()
        return report, model

    def _run_epoch(self, model, optimizer, scheduler, loader, report: TrainReport,
                   epoch: int) -> EpochLoss:
        model.train()
        totals = {"ce": 0.0, "cos": 0.0, "joint": 0.0}
        batches = 0
        for batch in tqdm(loader, desc=f"grid {report.grid_index} epoch {epoch}",
                          leave=False, disable=not self.progress):
            optimizer.zero_grad()
            output = model(batch)
            losses = model.compute_loss(output, batch.labels)
            if not torch.isfinite(losses.joint):
                raise DivergenceError(f"loss became {float(losses.joint)} at step {report.steps + 1}")
            losses.joint.backward()
            if self.config.grad_clip_norm is not None:
                torch.nn.utils.clip_grad_norm_(model.parameters(), self.config.grad_clip_norm)
            optimizer.step()
            scheduler.step()
            report.steps += 1
            for name, value in losses.as_floats().items():
                totals[name] += value
            batches += 1
        return EpochLoss(epoch=epoch, **{k: v / max(batches, 1) for k, v in totals.items()})


def train(
    config: TrainConfig,
    train_pairs: Sequence[StancePair],
    dev_pairs: Sequence[StancePair],
    model_factory: ModelFactory,
    output_dir: Optional[Union[str, Path]] = None,
    checkpoint_config: Optional[Dict[str, Any]] = None,
    progress: bool = True,
) -> TrainReport:
    """Grid-search training; returns the selected report with the full grid attached."""
    trainer = StanceTrainer(config, model_factory, output_dir, checkpoint_config, progress)
    return trainer.train(train_pairs, dev_pairs)


def train_lstm_baseline(
    config: TrainConfig,
    train_pairs: Sequence[StancePair],
    dev_pairs: Sequence[StancePair],
    output_dir: Optional[Union[str, Path]] = None,
    checkpoint_config: Optional[Dict[str, Any]] = None,
    extra_texts: Iterable[str] = (),
    progress: bool = True,
) -> TrainReport:
    """
    Train the bidirectional LSTM baseline with the same selection protocol.

    The word vocabulary covers the train and dev texts plus extra_texts
    (e.g. test texts, so their pretrained vectors are available at
    inference; no labels are read from them).

    Raises:
        SetupError: the embedding table is missing
    """
    config = replace(config, variant=Variant.LSTM_BASELINE)
    texts = [t for p in list(train_pairs) + list(dev_pairs)
             for t in (p.claim_text, p.perspective_text)]
    vocabulary = WordVocabulary.build(list(texts) + list(extra_texts))
    embeddings = load_word_embeddings(config.embeddings_path, vocabulary,
                                      dim=config.embedding_dim, seed=config.seed)

    def factory() -> StanceClassifier:
        return LSTMStanceClassifier(
            vocabulary,
            embeddings.clone(),
            hidden_size=config.lstm_hidden_size,
            dense_size=config.dense_size,
        )

    return train(config, train_pairs, dev_pairs, factory, output_dir, checkpoint_config, progress)
