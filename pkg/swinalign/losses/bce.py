"""
Classification task losses for swinalign.

Per-grade binary cross-entropy for the multi-head network, its categorical
counterpart for the single softmax head and the squared error used by the
regressor head. Each is summed over the samples of a batch and divided by the
batch size.
"""

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.utils.errors import ConfigError, DimensionError

BCE_EPS = 1e-7


def check_labels(labels, num_classes: int) -> np.ndarray:
    """Integer grade vector with every entry in [0, K-1]."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1:
        raise DimensionError(f"Labels must be a vector, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ConfigError(f"Labels must lie in [0, {num_classes - 1}]")
    return labels


def one_hot(labels, num_classes: int) -> np.ndarray:
    """y_n^k = 1 iff label n equals k."""
    return np.eye(num_classes)[check_labels(labels, num_classes)]


def _check_targets(y_true: np.ndarray, y_pred: Tensor) -> Tensor:
    if y_true.shape != y_pred.shape:
        raise DimensionError(f"Targets {y_true.shape} and predictions {y_pred.shape} differ in shape")
    if y_pred.ndim == 0 or y_pred.shape[0] == 0:
        raise DimensionError("Loss needs at least one sample")
    return Tensor(y_true)


def bce(y_true, y_pred: Tensor, eps: float = BCE_EPS) -> Tensor:
    """
    -(1/N) * sum_n [y log(p) + (1-y) log(1-p)] with p clamped to [eps, 1-eps].

    :param y_true: {0, 1} targets, (N,) or (N, K).
    :param y_pred: Probabilities of the same shape.
    :return: Scalar for (N,) inputs, (K,) per-grade values for (N, K) inputs.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    target = _check_targets(y_true, y_pred)
    p = ops.clip(y_pred, eps, 1.0 - eps)
    positive = ops.mul(target, ops.log(p))
    negative = ops.mul(ops.shift(ops.neg(target), 1.0), ops.log(ops.shift(ops.neg(p), 1.0)))
    per_sample = ops.neg(ops.add(positive, negative))
    return ops.scale(ops.reduce_sum(per_sample, axis=0), 1.0 / y_pred.shape[0])


def categorical_cross_entropy(y_true, probabilities: Tensor, eps: float = BCE_EPS) -> Tensor:
    """
    Cross-entropy split per grade: term k = (1/N) * sum_n -y_nk log p_nk.

    :param y_true: One-hot targets (N, K).
    :param probabilities: Softmax output (N, K).
    :return: (K,) terms whose sum is the usual cross-entropy.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    target = _check_targets(y_true, probabilities)
    p = ops.clip(probabilities, eps, 1.0)
    per_sample = ops.neg(ops.mul(target, ops.log(p)))
    return ops.scale(ops.reduce_sum(per_sample, axis=0), 1.0 / probabilities.shape[0])


def mse(y_true, prediction: Tensor) -> Tensor:
    """(1/N) * sum_n (y_hat_n - y_n)^2 as a (1,) term."""
    y_true = np.asarray(y_true, dtype=np.float64)
    target = _check_targets(y_true, prediction)
    error = ops.sub(prediction, target)
    squared = ops.mul(error, error)
    total = ops.scale(ops.reduce_sum(ops.reshape(squared, (-1,))), 1.0 / prediction.shape[0])
    return ops.reshape(total, (1,))
