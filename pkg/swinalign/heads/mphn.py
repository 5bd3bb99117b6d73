"""
MultiPredictionHead for swinalign.

K independent one-vs-rest decision makers. Decision maker k maps C through a
three-layer perceptron to its penultimate activation D_k, and a learned
vector omega_k reduces D_k to the score omega_k . D_k whose sigmoid is the
probability y_k of grade k. The decision features of all heads are averaged
into D.
"""

from typing import Sequence

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Parameter, Tensor
from swinalign.heads.head import HeadConfig, HeadOutputs, PredictionHead, decide_grade, score_column
from swinalign.nn.init import trunc_normal
from swinalign.nn.layers import Linear
from swinalign.nn.module import Module
from swinalign.utils.constants import HeadKinds
from swinalign.utils.errors import DimensionError


class ClassifierHead(Module):
    """
    Decision maker for one grade: S*d_e -> h1 (gelu) -> d_e (gelu), plus omega.
    """

    def __init__(self, grade: int, in_dim: int, hidden_dim: int, embed_dim: int, rng: np.random.Generator):
        super().__init__()
        self.grade = grade
        self.layer1 = Linear(in_dim, hidden_dim, rng)
        self.layer2 = Linear(hidden_dim, embed_dim, rng)
        self.omega = Parameter(trunc_normal(rng, (embed_dim,)))

    def forward(self, features: Tensor) -> Tensor:
        return ops.gelu(self.layer2(ops.gelu(self.layer1(features))))


def head_forward(features: Tensor, head: ClassifierHead) -> Tensor:
    """D_k = C_psi_k(C)."""
    if features.shape[-1] != head.layer1.in_features:
        raise DimensionError(
            f"Decision maker {head.grade} expects width {head.layer1.in_features}, got {features.shape}"
        )
    return head(features)


def decision_score(decision: Tensor, omega: Tensor) -> Tensor:
    """omega . D_k per sample; (d,) -> scalar, (B, d) -> (B,)."""
    if decision.shape[-1] != omega.shape[0] or omega.ndim != 1:
        raise DimensionError(f"Cannot reduce decision features {decision.shape} with omega {omega.shape}")
    batched = decision if decision.ndim == 2 else ops.reshape(decision, (1, decision.shape[0]))
    score = ops.matmul(batched, ops.reshape(omega, (omega.shape[0], 1)))
    return ops.reshape(score, (batched.shape[0],) if decision.ndim == 2 else ())


def predict(decision: Tensor, omega: Tensor) -> Tensor:
    """y_k = sigmoid(omega_k . D_k)."""
    return ops.sigmoid(decision_score(decision, omega))


def aggregate_decision_features(decisions: Sequence[Tensor]) -> Tensor:
    """Elementwise mean of D_1..D_K."""
    decisions = list(decisions)
    if not decisions:
        raise DimensionError("No decision features to aggregate")
    for d in decisions[1:]:
        if d.shape != decisions[0].shape:
            raise DimensionError(f"Decision features {decisions[0].shape} and {d.shape} differ")
    stacked = ops.concat([ops.reshape(d, (1,) + d.shape) for d in decisions], axis=0)
    return ops.mean_over_axis(stacked, axis=0)


class MultiPredictionHead(PredictionHead):
    """K decision makers, named head0..head{K-1} directly under the model."""

    kind = HeadKinds.MPHN
    attribute_name = "heads"
    transparent = True

    def __init__(self, config: HeadConfig, in_dim: int, embed_dim: int, rng: np.random.Generator):
        super().__init__(config, in_dim, embed_dim)
        self.heads = []
        for k in range(config.num_classes):
            head = ClassifierHead(k, in_dim, config.hidden_dim, embed_dim, rng)
            setattr(self, f"head{k}", head)
            self.heads.append(head)

    def forward(self, features: Tensor) -> HeadOutputs:
        self._check_input(features)
        decisions = [head_forward(features, head) for head in self.heads]
        batch = features.shape[0]
        scores = [
            ops.reshape(decision_score(d, head.omega), (batch, 1))
            for d, head in zip(decisions, self.heads)
        ]
        scores = ops.concat(scores, axis=1)
        return HeadOutputs(
            kind=self.kind,
            scores=scores,
            aggregated=aggregate_decision_features(decisions),
            decision_features=decisions,
            probabilities=ops.sigmoid(scores),
        )

    def decide(self, outputs: HeadOutputs) -> np.ndarray:
        return decide_grade(outputs.probabilities.data)

    def score(self, outputs: HeadOutputs, grade: int) -> Tensor:
        return score_column(outputs.scores, grade)
