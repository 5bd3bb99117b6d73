"""
Base PredictionHead interface for swinalign.

This module defines the configuration shared by all head variants, the
outputs every head returns, and the abstract PredictionHead class.

Heads:
- map the fused representation C to per-grade scores,
- expose a decision-feature vector D (the alignment target of the
  negative-cosine regularizer),
- turn their outputs into one grade per sample (decide()),
- name a differentiable per-grade score for saliency maps (score()).
"""

import abc
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.nn.module import Module
from swinalign.utils.constants import NUM_GRADES, HeadKinds
from swinalign.utils.errors import ConfigError, DimensionError


@dataclass
class HeadConfig:
    """
    Configuration data for a prediction head.
    """
    kind: str = HeadKinds.MPHN
    num_classes: int = NUM_GRADES
    hidden_dim: int = 128

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in HeadKinds.ALL:
            raise ConfigError(f"Unknown head kind '{self.kind}'. Expected one of {HeadKinds.ALL}.")
        if self.num_classes < 2:
            raise ConfigError("A head needs at least two grades.")
        if self.hidden_dim <= 0:
            raise ConfigError("Head hidden_dim must be positive.")


@dataclass
class HeadOutputs:
    """
    Attributes:
        kind (str): Head kind that produced the outputs.
        scores (Tensor): Pre-activation scores, (B, K); (B, 1) for the regressor.
        aggregated (Tensor): Decision features D, (B, d_e).
        decision_features (List[Tensor]): Per-head D_k (a single entry for
                                          single-network heads).
        probabilities (Tensor): (B, K) probabilities, None for the regressor.
    """
    kind: str
    scores: Tensor
    aggregated: Tensor
    decision_features: List[Tensor] = field(default_factory=list)
    probabilities: Optional[Tensor] = None


class PredictionHead(Module):
    """
    Abstract base class for all prediction heads.

    Concrete heads (MultiPredictionHead, SinglePredictionHead,
    MLPRegressorHead) implement forward(), decide() and score().
    """

    kind: str = ""
    # Attribute under which a model stores the head; fixes checkpoint names.
    attribute_name: str = "predictor"

    def __init__(self, config: HeadConfig, in_dim: int, embed_dim: int):
        super().__init__()
        self.config = config
        self.num_classes = config.num_classes
        self.in_dim = in_dim
        self.embed_dim = embed_dim

    def _check_input(self, features: Tensor) -> None:
        if features.ndim != 2 or features.shape[1] != self.in_dim:
            raise DimensionError(
                f"{type(self).__name__} expects features (B, {self.in_dim}), got {features.shape}"
            )

    @abc.abstractmethod
    def forward(self, features: Tensor) -> HeadOutputs:
        """
        :param features: Fused representation C, (B, S * d_e).
        :return: HeadOutputs.
        """
        raise NotImplementedError("Subclasses must implement forward().")

    @abc.abstractmethod
    def decide(self, outputs: HeadOutputs) -> np.ndarray:
        """
        :return: Integer grade per sample.
        """
        raise NotImplementedError("Subclasses must implement decide().")

    @abc.abstractmethod
    def score(self, outputs: HeadOutputs, grade: int) -> Tensor:
        """
        :return: Differentiable (B,) score whose gradient explains ``grade``.
        """
        raise NotImplementedError("Subclasses must implement score().")


def score_column(scores: Tensor, grade: int) -> Tensor:
    """Column ``grade`` of a (B, K) score tensor, as (B,)."""
    if not 0 <= grade < scores.shape[1]:
        raise ValueError(f"Grade {grade} is out of range for {scores.shape[1]} grades")
    column = ops.slice_axis(scores, 1, grade, grade + 1)
    return ops.reshape(column, (scores.shape[0],))


def decide_grade(probabilities: np.ndarray) -> np.ndarray:
    """
    Argmax over grades; ties resolve to the lower grade.

    :param probabilities: (K,) or (B, K).
    :return: Grade index (0-d for a single vector) or (B,) grades.
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    return np.argmax(probabilities, axis=-1)
