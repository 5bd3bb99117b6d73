"""
Trainer for swinalign.

Seeded mini-batch optimization of the combined objective. Every step runs
forward, loss, backward, optimizer update and gradient reset on a fresh tape.
After each epoch the model is scored on the validation split; the state with
the best balanced accuracy is kept and training stops early once it has not
improved for ``patience`` epochs.

A run directory holds:
    config.cfg   the experiment configuration, verbatim
    metrics.log  one line per step: step, epoch, total, sum_bce, ncsl
    final.kckp   parameters after the last step
    best.kckp    parameters of the best validation epoch
"""

import logging
import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from swinalign.autodiff.tensor import Tape
from swinalign.config import ExperimentConfig
from swinalign.data.dataset import Dataset
from swinalign.io.checkpoint import load_checkpoint, save_checkpoint
from swinalign.losses.objective import LossReport
from swinalign.model import SwinAlignModel
from swinalign.training.evaluation import evaluate
from swinalign.training.optimizer import Optimizer, create_optimizer
from swinalign.utils.errors import ContractError, DivergenceError, NumericalError

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.cfg"
METRICS_FILE = "metrics.log"
FINAL_CHECKPOINT = "final.kckp"
BEST_CHECKPOINT = "best.kckp"


@dataclass
class StepRecord:
    step: int
    epoch: int
    total: float
    sum_bce: float
    ncsl: float

    def to_line(self) -> str:
        return f"{self.step}\t{self.epoch}\t{self.total!r}\t{self.sum_bce!r}\t{self.ncsl!r}"


@dataclass
class TrainResult:
    """
    Attributes:
        model (SwinAlignModel): Model holding the best state (final state if
                                there was no validation split).
        trace (List[StepRecord]): One record per optimizer step.
        best_epoch (int): Epoch of the kept state, 0 if none ran.
        best_balanced_accuracy (float): Validation B-ACC of the kept state, NaN without validation.
        epochs_run (int): Number of completed epochs.
        stopped_early (bool): Whether patience ran out.
        run_dir (str): Output directory, if any.
    """
    model: SwinAlignModel
    trace: List[StepRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_balanced_accuracy: float = float("nan")
    epochs_run: int = 0
    stopped_early: bool = False
    run_dir: Optional[str] = None

    @property
    def loss_trace(self) -> List[float]:
        return [r.total for r in self.trace]


class Trainer:
    """
    Trains one model for one ExperimentConfig.

    :param config: Experiment configuration; ``config.seed`` seeds both the
                   initialization and the batch order.
    :param model: Optional pre-built model, e.g. to continue from a checkpoint;
                  when given, ``training.init_checkpoint`` is not applied.
    """

    def __init__(self, config: ExperimentConfig, model: Optional[SwinAlignModel] = None):
        self.config = config
        if model is None:
            model = SwinAlignModel(config.model, config.seed)
            if config.training.init_checkpoint:
                model.load_feature_extractor(load_checkpoint(config.training.init_checkpoint))
        self.model = model
        self.optimizer: Optimizer = create_optimizer(self.model.parameters(), config.optimizer)
        self._batch_rng = np.random.default_rng([config.seed, 1])
        self.step = 0

    def train_step(self, images: np.ndarray, labels: np.ndarray, epoch: int) -> StepRecord:
        """
        One optimizer update on one mini-batch.

        :raises DivergenceError: When the loss or any intermediate value is not finite.
        """
        step = self.step + 1
        try:
            with Tape() as tape:
                outputs = self.model(images)
                loss, report = self.model.objective(outputs, labels, self.config.loss)
                if not math.isfinite(report.total):
                    raise DivergenceError("Training loss is not finite", step)
                tape.backward(loss, self.optimizer.params)
                logger.debug("step %d: %d tape entries, loss %.6f", step, len(tape), report.total)
        except DivergenceError:
            raise
        except NumericalError as e:
            raise DivergenceError(f"Training diverged: {e}", step) from e
        self.optimizer.step()
        self.optimizer.zero_grad()
        self.step = step
        return record_from_report(step, epoch, report)

    def fit(self, train_set: Dataset, val_set: Optional[Dataset] = None, run_dir: Optional[str] = None) -> TrainResult:
        """
        Train for up to ``training.epochs`` epochs.

        :param train_set: Non-empty training split.
        :param val_set: Validation split for model selection; skipped when empty or None.
        :param run_dir: Where to write config, metrics log and checkpoints.
        """
        if len(train_set) == 0:
            raise ContractError("Cannot train on an empty dataset")
        cfg = self.config.training
        if val_set is not None and len(val_set) == 0:
            logger.warning("Validation split is empty; keeping the final state")
            val_set = None

        result = TrainResult(self.model, run_dir=run_dir)
        log_file = None
        if run_dir:
            os.makedirs(run_dir, exist_ok=True)
            self.config.save(os.path.join(run_dir, CONFIG_FILE))
            log_file = open(os.path.join(run_dir, METRICS_FILE), "w", encoding="utf-8")
        logger.info(
            "Training %s head for up to %d epochs on %d samples (seed %d)",
            self.model.kind, cfg.epochs, len(train_set), self.config.seed,
        )

        best_state: Optional["OrderedDict[str, np.ndarray]"] = None
        stale = 0
        try:
            for epoch in range(1, cfg.epochs + 1):
                epoch_losses = []
                for images, labels in train_set.batches(cfg.batch_size, self._batch_rng):
                    record = self.train_step(images, labels, epoch)
                    result.trace.append(record)
                    epoch_losses.append(record.total)
                    if log_file is not None:
                        log_file.write(record.to_line() + "\n")
                result.epochs_run = epoch

                if val_set is None:
                    logger.info("epoch %d: loss %.4f", epoch, float(np.mean(epoch_losses)))
                    continue
                val_report = evaluate(self.model, val_set, cfg.eval_batch_size)
                logger.info(
                    "epoch %d: loss %.4f, val B-ACC %.4f",
                    epoch, float(np.mean(epoch_losses)), val_report.balanced_accuracy,
                )
                if best_state is None or val_report.balanced_accuracy > result.best_balanced_accuracy:
                    best_state = self.model.state_dict()
                    result.best_epoch = epoch
                    result.best_balanced_accuracy = val_report.balanced_accuracy
                    stale = 0
                    if run_dir:
                        save_checkpoint(os.path.join(run_dir, BEST_CHECKPOINT), best_state)
                else:
                    stale += 1
                    if stale >= cfg.patience:
                        logger.warning(
                            "Stopping early after epoch %d: no validation improvement for %d epochs",
                            epoch, stale,
                        )
                        result.stopped_early = True
                        break
        finally:
            if log_file is not None:
                log_file.close()

        if run_dir:
            save_checkpoint(os.path.join(run_dir, FINAL_CHECKPOINT), self.model.state_dict())
            if best_state is None:
                save_checkpoint(os.path.join(run_dir, BEST_CHECKPOINT), self.model.state_dict())
            logger.info("Wrote checkpoints to %s", run_dir)
        if best_state is not None:
            self.model.load_state_dict(best_state)
        else:
            result.best_epoch = result.epochs_run
        return result


def record_from_report(step: int, epoch: int, report: LossReport) -> StepRecord:
    return StepRecord(step, epoch, report.total, report.sum_bce, report.ncsl)


def train(
    config: ExperimentConfig,
    train_set: Dataset,
    val_set: Optional[Dataset] = None,
    run_dir: Optional[str] = None,
) -> TrainResult:
    """Build a fresh model for ``config`` and train it."""
    return Trainer(config).fit(train_set, val_set, run_dir)


def read_metrics_log(path: str) -> List[StepRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            step, epoch, total, sum_bce, ncsl = line.rstrip("\n").split("\t")
            records.append(StepRecord(int(step), int(epoch), float(total), float(sum_bce), float(ncsl)))
    return records
