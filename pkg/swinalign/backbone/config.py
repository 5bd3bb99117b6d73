"""
BackboneConfig for swinalign.
"""

from dataclasses import dataclass, field
from typing import List

from swinalign.utils.errors import ConfigError


@dataclass
class BackboneConfig:
    """
    Configuration of the hierarchical windowed-attention feature extractor.

    The defaults are the smallest configuration that exercises four stages
    with every feature-map side divisible by the window.
    """
    image_size: int = 64
    in_channels: int = 3
    patch_size: int = 4
    embed_dim: int = 16
    depths: List[int] = field(default_factory=lambda: [2, 2, 2, 2])
    num_heads: List[int] = field(default_factory=lambda: [1, 2, 4, 8])
    window_size: int = 2
    mlp_ratio: float = 4.0

    def __post_init__(self):
        self.depths = [int(d) for d in self.depths]
        self.num_heads = [int(h) for h in self.num_heads]
        if min(self.image_size, self.in_channels, self.patch_size, self.embed_dim, self.window_size) <= 0:
            raise ConfigError("Backbone sizes must be positive.")
        if self.mlp_ratio <= 0:
            raise ConfigError("Backbone mlp_ratio must be positive.")
        if not self.depths or len(self.depths) != len(self.num_heads):
            raise ConfigError(
                f"depths {self.depths} and num_heads {self.num_heads} must be non-empty and of equal length."
            )
        if self.image_size % self.patch_size:
            raise ConfigError(
                f"image_size {self.image_size} is not divisible by patch_size {self.patch_size}."
            )
        for stage in range(1, self.num_stages + 1):
            side, dim = self.stage_side(stage), self.stage_dim(stage)
            heads = self.num_heads[stage - 1]
            if self.depths[stage - 1] < 1:
                raise ConfigError(f"Stage {stage} needs at least one block.")
            if side < 1 or side % self.window_size:
                raise ConfigError(
                    f"Stage {stage} feature side {side} is not divisible by window_size {self.window_size}."
                )
            if heads < 1 or dim % heads:
                raise ConfigError(f"Stage {stage} width {dim} is not divisible by {heads} heads.")
            if stage > 1 and self.stage_side(stage - 1) % 2:
                raise ConfigError(f"Stage {stage - 1} side {self.stage_side(stage - 1)} cannot be merged.")

    @property
    def num_stages(self) -> int:
        return len(self.depths)

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    def stage_side(self, stage: int) -> int:
        """Feature-map side at a 1-based stage index."""
        return self.grid_size // (2 ** (stage - 1))

    def stage_dim(self, stage: int) -> int:
        """Channel width at a 1-based stage index."""
        return self.embed_dim * (2 ** (stage - 1))

    def shift_size(self, stage: int) -> int:
        """Shift used by SW-MSA blocks of a stage; 0 when one window covers the map."""
        if self.stage_side(stage) <= self.window_size:
            return 0
        return self.window_size // 2
