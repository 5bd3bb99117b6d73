"""
SwinBackbone for swinalign.

Hierarchical feature extractor: patch embedding, then S stages of windowed
transformer blocks, each stage after the first entered through a patch merge.
The output of every stage (after its blocks, before the next merge) is kept.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from swinalign.autodiff.tensor import Tensor
from swinalign.backbone.blocks import PatchEmbed, PatchMerging, SwinBlock
from swinalign.backbone.config import BackboneConfig
from swinalign.nn.module import Module
from swinalign.utils.errors import DimensionError

logger = logging.getLogger(__name__)


@dataclass
class BackboneOutput:
    """
    Per-stage feature maps O_1..O_S.

    Attributes:
        stage_maps (List[Tensor]): Stage s map shaped (B, H_s, W_s, C_s).
    """
    stage_maps: List[Tensor]

    @property
    def final(self) -> Tensor:
        return self.stage_maps[-1]

    def __len__(self) -> int:
        return len(self.stage_maps)


class SwinStage(Module):
    """One resolution level: optional entry merge, then alternating W-MSA / SW-MSA blocks."""

    def __init__(self, config: BackboneConfig, stage: int, rng: np.random.Generator):
        super().__init__()
        self.stage = stage
        dim = config.stage_dim(stage)
        self.merge: Optional[PatchMerging] = None
        if stage > 1:
            self.merge = PatchMerging(config.stage_dim(stage - 1), rng)
        self.blocks: List[SwinBlock] = []
        for j in range(config.depths[stage - 1]):
            block = SwinBlock(
                dim=dim,
                resolution=config.stage_side(stage),
                num_heads=config.num_heads[stage - 1],
                window_size=config.window_size,
                shift_size=config.shift_size(stage) if j % 2 else 0,
                mlp_ratio=config.mlp_ratio,
                rng=rng,
            )
            setattr(self, f"block{j + 1}", block)
            self.blocks.append(block)

    def forward(self, x: Tensor) -> Tensor:
        if self.merge is not None:
            x = self.merge(x)
        for block in self.blocks:
            x = block(x)
        return x


class SwinBackbone(Module):
    """
    The learnable function f_theta producing one feature map per stage.

    :param config: Backbone configuration.
    :param rng: Initialization randomness; the same seed gives the same weights.
    """

    # Stage parameters are named stage{s}.* directly under the owning model.
    transparent = True

    def __init__(self, config: BackboneConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.patch_embed = PatchEmbed(config.patch_size, config.in_channels, config.embed_dim, rng)
        self.stages: List[SwinStage] = []
        for s in range(1, config.num_stages + 1):
            stage = SwinStage(config, s, rng)
            setattr(self, f"stage{s}", stage)
            self.stages.append(stage)

    def forward(self, images: Tensor) -> BackboneOutput:
        """
        :param images: Batch (B, H, W, Cin) matching the configuration.
        :return: BackboneOutput with S stage maps.
        """
        cfg = self.config
        expected = (cfg.image_size, cfg.image_size, cfg.in_channels)
        if images.ndim != 4 or images.shape[1:] != expected:
            raise DimensionError(f"Expected images (B, {expected[0]}, {expected[1]}, {expected[2]}), got {images.shape}")
        x = self.patch_embed(images)
        maps = []
        for stage in self.stages:
            x = stage(x)
            maps.append(x)
        return BackboneOutput(maps)

    def resume(self, earlier: Sequence[Tensor]) -> BackboneOutput:
        """
        Run the stages that follow the given leading stage maps.

        :param earlier: Maps O_1..O_r of an earlier forward, 1 <= r <= S; kept as they are.
        :return: BackboneOutput with all S stage maps.
        """
        maps = list(earlier)
        if not 1 <= len(maps) <= len(self.stages):
            raise DimensionError(f"Cannot resume from {len(maps)} stage maps of {len(self.stages)}")
        x = maps[-1]
        for stage in self.stages[len(maps):]:
            x = stage(x)
            maps.append(x)
        return BackboneOutput(maps)


def backbone_forward(images: Tensor, backbone: SwinBackbone) -> BackboneOutput:
    """Run the backbone on a batch of images."""
    return backbone(images)
