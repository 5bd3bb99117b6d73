"""
Combined training objective for swinalign.

total = sum_k task_k + lambda * ncsl, where the task terms are the per-grade
binary cross-entropies (mphn), the per-grade split of the categorical
cross-entropy (sphn) or the single squared-error term (mlpreg).
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.heads.head import HeadOutputs
from swinalign.losses.bce import BCE_EPS, bce, categorical_cross_entropy, check_labels, mse, one_hot
from swinalign.losses.ncsl import ncsl
from swinalign.utils.constants import HeadKinds
from swinalign.utils.errors import ConfigError


@dataclass
class LossConfig:
    """
    Configuration of the objective. ``lambda_`` is the regularization weight,
    written ``loss.lambda`` in config files.
    """
    lambda_: float = 0.1
    bce_eps: float = BCE_EPS
    ncsl_enabled: bool = True

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ConfigError("loss.lambda must be non-negative.")
        if not 0 < self.bce_eps <= 1e-3:
            raise ConfigError("loss.bce_eps must lie in (0, 1e-3].")


@dataclass
class LossReport:
    """
    Attributes:
        bce_per_class (np.ndarray): Task terms, K values (one for the regressor).
        ncsl (float): Regularizer value, reported even when disabled.
        total (float): Value that was optimized.
    """
    bce_per_class: np.ndarray
    ncsl: float
    total: float
    lambda_: float = 0.0
    ncsl_enabled: bool = True
    kind: str = field(default=HeadKinds.MPHN)

    @property
    def sum_bce(self) -> float:
        return float(np.sum(self.bce_per_class))


def total_loss(bce_terms: Tensor, ncsl_value: Optional[Tensor], config: LossConfig) -> Tensor:
    """
    sum_k bce_k + lambda * ncsl; the regularizer is left out when disabled.

    :param bce_terms: (K,) task terms.
    :param ncsl_value: Scalar regularizer, may be None when disabled.
    """
    summed = ops.reduce_sum(bce_terms)
    if not config.ncsl_enabled or ncsl_value is None:
        return summed
    return ops.add(summed, ops.scale(ncsl_value, config.lambda_))


def task_terms(outputs: HeadOutputs, labels: np.ndarray, num_classes: int, eps: float) -> Tensor:
    """Per-grade task loss terms for the head that produced ``outputs``."""
    labels = np.asarray(labels, dtype=np.int64)
    if outputs.kind == HeadKinds.MPHN:
        return bce(one_hot(labels, num_classes), outputs.probabilities, eps)
    if outputs.kind == HeadKinds.SPHN:
        return categorical_cross_entropy(one_hot(labels, num_classes), outputs.probabilities, eps)
    if outputs.kind == HeadKinds.MLPREG:
        labels = check_labels(labels, num_classes)
        return mse(labels.astype(np.float64).reshape(-1, 1), outputs.scores)
    raise ConfigError(f"No objective for head kind '{outputs.kind}'")


def compute_objective(
    projections: Sequence[Tensor],
    outputs: HeadOutputs,
    labels: np.ndarray,
    config: LossConfig,
    num_classes: int,
) -> Tuple[Tensor, LossReport]:
    """
    Build the training loss for one batch.

    :param projections: Stage projections P_1..P_S, each (B, d_e).
    :param outputs: Head outputs for the same batch.
    :param labels: Integer grades (B,).
    :return: The scalar loss tensor and its report.
    """
    terms = task_terms(outputs, labels, num_classes, config.bce_eps)
    regularizer = ncsl(projections, outputs.aggregated)
    total = total_loss(terms, regularizer, config)
    report = LossReport(
        bce_per_class=terms.data.copy(),
        ncsl=regularizer.item(),
        total=total.item(),
        lambda_=config.lambda_,
        ncsl_enabled=config.ncsl_enabled,
        kind=outputs.kind,
    )
    return total, report
