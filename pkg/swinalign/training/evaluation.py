"""
Evaluation of a model or checkpoint on a labeled dataset.
"""

import logging

from swinalign.data.dataset import Dataset
from swinalign.io.checkpoint import load_checkpoint
from swinalign.model import ModelConfig, SwinAlignModel
from swinalign.training.metrics import MetricsReport, compute_metrics
from swinalign.utils.errors import ContractError

logger = logging.getLogger(__name__)


def evaluate(model: SwinAlignModel, dataset: Dataset, batch_size: int = 64) -> MetricsReport:
    """
    Metrics of the model's decided grades against the dataset labels.

    :raises ContractError: When the dataset is empty.
    """
    if len(dataset) == 0:
        raise ContractError(f"Cannot evaluate on the empty '{dataset.split}' split")
    predictions = model.predict(dataset.images, batch_size)
    report = compute_metrics(dataset.labels, predictions, model.num_classes)
    logger.debug("Evaluated %d '%s' samples: %s", len(dataset), dataset.split, report.summary())
    return report


def load_model(checkpoint_path: str, config: ModelConfig, seed: int = 0) -> SwinAlignModel:
    """Build a model for ``config`` and load a KCKP checkpoint into it."""
    model = SwinAlignModel(config, seed)
    model.load_state_dict(load_checkpoint(checkpoint_path))
    return model


def evaluate_checkpoint(
    checkpoint_path: str,
    config: ModelConfig,
    dataset: Dataset,
    batch_size: int = 64,
    seed: int = 0,
) -> MetricsReport:
    return evaluate(load_model(checkpoint_path, config, seed), dataset, batch_size)
