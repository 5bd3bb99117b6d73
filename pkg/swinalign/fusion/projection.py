"""
Feature fusion for swinalign.

Each stage map is layer-normalized per token, average-pooled over space and
passed through its own projection head into a shared d_e-wide space; the
projections are concatenated in stage order into the enhanced representation.
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.backbone.config import BackboneConfig
from swinalign.backbone.swin import BackboneOutput
from swinalign.nn.layers import Linear
from swinalign.nn.module import Module
from swinalign.utils.errors import ConfigError, DimensionError


@dataclass
class FusionConfig:
    """
    Configuration of the projection heads.
    """
    embed_dim: int = 64

    def __post_init__(self):
        if self.embed_dim <= 0:
            raise ConfigError("Fusion embed_dim must be positive.")


@dataclass
class FusedFeatures:
    """
    Attributes:
        projected (List[Tensor]): P_1..P_S, each (B, d_e).
        concatenated (Tensor): C = P_1 || ... || P_S, shape (B, S * d_e).
    """
    projected: List[Tensor]
    concatenated: Tensor


def pool_normalize(stage_map: Tensor) -> Tensor:
    """
    Normalize every token over channels, then average over all positions.

    :param stage_map: (B, H, W, C).
    :return: (B, C).
    """
    if stage_map.ndim != 4:
        raise DimensionError(f"pool_normalize expects (B, H, W, C), got {stage_map.shape}")
    b, h, w, c = stage_map.shape
    normalized = ops.layer_normalize(stage_map, axis=-1)
    return ops.mean_over_axis(ops.reshape(normalized, (b, h * w, c)), axis=1)


class ProjectionHead(Module):
    """Two-layer perceptron C_s -> d_e (gelu) -> d_e."""

    def __init__(self, stage: int, in_dim: int, embed_dim: int, rng: np.random.Generator):
        super().__init__()
        self.stage = stage
        self.in_dim = in_dim
        self.layer1 = Linear(in_dim, embed_dim, rng)
        self.layer2 = Linear(embed_dim, embed_dim, rng)

    def forward(self, pooled: Tensor) -> Tensor:
        if pooled.shape[-1] != self.in_dim:
            raise DimensionError(
                f"Projection head of stage {self.stage} expects width {self.in_dim}, got {pooled.shape}"
            )
        return self.layer2(ops.gelu(self.layer1(pooled)))


def project(pooled: Tensor, head: ProjectionHead) -> Tensor:
    """P_s = P_phi_s(pooled O_s)."""
    return head(pooled)


def fuse(projections: Sequence[Tensor]) -> FusedFeatures:
    """
    Concatenate stage projections in stage order.

    :param projections: S tensors (B, d_e).
    """
    projections = list(projections)
    if not projections:
        raise DimensionError("fuse needs at least one projection")
    width = projections[0].shape
    for p in projections[1:]:
        if p.shape != width:
            raise DimensionError(f"fuse: projection shapes {width} and {p.shape} differ")
    return FusedFeatures(projections, ops.concat(projections, axis=-1))


class FeatureFusion(Module):
    """
    The projection heads of all stages.

    Parameters are named proj.stage{s}.layer{i}.weight/bias when the module is
    attached to a model as ``proj``.
    """

    def __init__(self, backbone_config: BackboneConfig, config: FusionConfig, rng: np.random.Generator):
        super().__init__()
        self.embed_dim = config.embed_dim
        self.heads: List[ProjectionHead] = []
        for s in range(1, backbone_config.num_stages + 1):
            head = ProjectionHead(s, backbone_config.stage_dim(s), config.embed_dim, rng)
            setattr(self, f"stage{s}", head)
            self.heads.append(head)

    @property
    def output_dim(self) -> int:
        return self.embed_dim * len(self.heads)

    def forward(self, features: BackboneOutput) -> FusedFeatures:
        if len(features) != len(self.heads):
            raise DimensionError(f"Expected {len(self.heads)} stage maps, got {len(features)}")
        projections = [
            project(pool_normalize(stage_map), head)
            for stage_map, head in zip(features.stage_maps, self.heads)
        ]
        return fuse(projections)
