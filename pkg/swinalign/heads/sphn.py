"""
SinglePredictionHead for swinalign.

One shared perceptron S*d_e -> h1 (gelu) -> d_e (gelu) -> K logits with a
softmax over grades. The penultimate activation plays the role of D for the
negative-cosine regularizer.
"""

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.heads.head import HeadConfig, HeadOutputs, PredictionHead, decide_grade, score_column
from swinalign.nn.layers import Linear
from swinalign.utils.constants import HeadKinds


class SinglePredictionHead(PredictionHead):
    """Softmax classifier over all grades; parameters live under ``sphn``."""

    kind = HeadKinds.SPHN
    attribute_name = "sphn"

    def __init__(self, config: HeadConfig, in_dim: int, embed_dim: int, rng: np.random.Generator):
        super().__init__(config, in_dim, embed_dim)
        self.layer1 = Linear(in_dim, config.hidden_dim, rng)
        self.layer2 = Linear(config.hidden_dim, embed_dim, rng)
        self.layer3 = Linear(embed_dim, config.num_classes, rng)

    def forward(self, features: Tensor) -> HeadOutputs:
        self._check_input(features)
        return sphn_forward(features, self)

    def decide(self, outputs: HeadOutputs) -> np.ndarray:
        return decide_grade(outputs.probabilities.data)

    def score(self, outputs: HeadOutputs, grade: int) -> Tensor:
        # The grade logit, before the softmax couples the grades.
        return score_column(outputs.scores, grade)


def sphn_forward(features: Tensor, head: SinglePredictionHead) -> HeadOutputs:
    """K softmax probabilities plus the penultimate vector."""
    penultimate = ops.gelu(head.layer2(ops.gelu(head.layer1(features))))
    logits = head.layer3(penultimate)
    return HeadOutputs(
        kind=HeadKinds.SPHN,
        scores=logits,
        aggregated=penultimate,
        decision_features=[penultimate],
        probabilities=ops.softmax(logits, axis=-1),
    )
