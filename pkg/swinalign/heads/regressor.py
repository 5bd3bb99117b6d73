"""
MLPRegressorHead for swinalign.

Treats grading as regression: S*d_e -> h1 (gelu) -> d_e (gelu) -> 1. The
scalar output is rounded to the nearest grade, half-integers toward the lower
grade, and clamped to [0, K-1].
"""

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.heads.head import HeadConfig, HeadOutputs, PredictionHead
from swinalign.nn.layers import Linear
from swinalign.utils.constants import HeadKinds


class MLPRegressorHead(PredictionHead):
    """Scalar grade regressor; parameters live under ``reg``."""

    kind = HeadKinds.MLPREG
    attribute_name = "reg"

    def __init__(self, config: HeadConfig, in_dim: int, embed_dim: int, rng: np.random.Generator):
        super().__init__(config, in_dim, embed_dim)
        self.layer1 = Linear(in_dim, config.hidden_dim, rng)
        self.layer2 = Linear(config.hidden_dim, embed_dim, rng)
        self.layer3 = Linear(embed_dim, 1, rng)

    def forward(self, features: Tensor) -> HeadOutputs:
        self._check_input(features)
        return regressor_forward(features, self)

    def decide(self, outputs: HeadOutputs) -> np.ndarray:
        return regressor_decide(outputs.scores.data[:, 0], self.num_classes)

    def score(self, outputs: HeadOutputs, grade: int) -> Tensor:
        """-(y_hat - k)^2: largest when the regression lands on grade k."""
        if not 0 <= grade < self.num_classes:
            raise ValueError(f"Grade {grade} is out of range for {self.num_classes} grades")
        batch = outputs.scores.shape[0]
        error = ops.shift(ops.reshape(outputs.scores, (batch,)), -float(grade))
        return ops.neg(ops.mul(error, error))


def regressor_forward(features: Tensor, head: MLPRegressorHead) -> HeadOutputs:
    """Scalar prediction (B, 1) plus the penultimate vector."""
    penultimate = ops.gelu(head.layer2(ops.gelu(head.layer1(features))))
    return HeadOutputs(
        kind=HeadKinds.MLPREG,
        scores=head.layer3(penultimate),
        aggregated=penultimate,
        decision_features=[penultimate],
    )


def regressor_decide(prediction, num_classes: int = 5) -> np.ndarray:
    """
    clamp(round(y_hat), 0, K-1) with x.5 rounding down.

    :param prediction: Scalar or array of regression outputs.
    """
    grades = np.ceil(np.asarray(prediction, dtype=np.float64) - 0.5)
    return np.clip(grades, 0, num_classes - 1).astype(np.int64)
