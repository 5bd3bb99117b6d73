"""
Linear probe on raw pixels.

A logistic-regression baseline that shows how much of the synthetic task a
linear model on pixel values already solves.
"""

import logging

import numpy as np
from sklearn.linear_model import LogisticRegression

from swinalign.data.dataset import Dataset
from swinalign.training.metrics import MetricsReport, compute_metrics
from swinalign.utils.errors import ContractError

logger = logging.getLogger(__name__)


def _features(dataset: Dataset) -> np.ndarray:
    # Channels are replicas; the first one carries all the information.
    return dataset.images[..., 0].reshape(len(dataset), -1)


def linear_probe(
    train_set: Dataset,
    test_set: Dataset,
    num_classes: int,
    max_iter: int = 1000,
    C: float = 1.0,
    seed: int = 0,
) -> MetricsReport:
    """
    Fit a multinomial logistic regression on ``train_set`` pixels and score
    it on ``test_set``.
    """
    if len(train_set) == 0 or len(test_set) == 0:
        raise ContractError("The linear probe needs non-empty train and test splits")
    classifier = LogisticRegression(C=C, max_iter=max_iter, random_state=seed)
    classifier.fit(_features(train_set), train_set.labels)
    report = compute_metrics(test_set.labels, classifier.predict(_features(test_set)), num_classes)
    logger.info("Linear probe on raw pixels: %s", report.summary())
    return report
