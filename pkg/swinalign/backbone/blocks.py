"""
Transformer blocks, patch embedding and patch merging.
"""

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.backbone.attention import WindowAttention
from swinalign.backbone.windows import (
    cyclic_shift,
    shifted_attention_mask,
    window_partition,
    window_reverse,
)
from swinalign.nn.layers import LayerNorm, Linear, Mlp
from swinalign.nn.module import Module
from swinalign.utils.errors import ConfigError, DimensionError


class PatchEmbed(Module):
    """Flatten p x p x Cin patches and project them linearly to embed_dim."""

    def __init__(self, patch_size: int, in_channels: int, embed_dim: int, rng: np.random.Generator):
        super().__init__()
        self.patch_size = patch_size
        self.in_channels = in_channels
        self.proj = Linear(patch_size * patch_size * in_channels, embed_dim, rng)

    def forward(self, images: Tensor) -> Tensor:
        """(B, H, W, Cin) -> (B, H/p, W/p, embed_dim)."""
        if images.ndim != 4 or images.shape[-1] != self.in_channels:
            raise DimensionError(
                f"Expected images (B, H, W, {self.in_channels}), got shape {images.shape}"
            )
        b, h, w, c = images.shape
        p = self.patch_size
        if h % p or w % p:
            raise ConfigError(f"Image {h}x{w} is not divisible by patch size {p}")
        x = ops.reshape(images, (b, h // p, p, w // p, p, c))
        x = ops.permute(x, (0, 1, 3, 2, 4, 5))
        x = ops.reshape(x, (b, h // p, w // p, p * p * c))
        return self.proj(x)


class SwinBlock(Module):
    """
    Pre-norm residual block: x + (S)W-MSA(LN(x)), then + MLP(LN(.)).

    A block with shift_size > 0 rolls the normalized map up-left before
    partitioning, masks attention between tokens from different pre-shift
    regions, and rolls the result back.
    """

    def __init__(
        self,
        dim: int,
        resolution: int,
        num_heads: int,
        window_size: int,
        shift_size: int,
        mlp_ratio: float,
        rng: np.random.Generator,
    ):
        super().__init__()
        self.dim = dim
        self.resolution = resolution
        self.window_size = window_size
        self.shift_size = shift_size
        self.norm1 = LayerNorm(dim)
        self.attn = WindowAttention(dim, window_size, num_heads, rng)
        self.norm2 = LayerNorm(dim)
        self.mlp = Mlp(dim, int(dim * mlp_ratio), dim, rng)
        self.attn_mask = None
        if shift_size > 0:
            self.attn_mask = shifted_attention_mask(resolution, resolution, window_size, shift_size)

    @property
    def shifted(self) -> bool:
        return self.shift_size > 0

    def forward(self, x: Tensor) -> Tensor:
        b, h, w, c = x.shape
        if c != self.dim:
            raise DimensionError(f"SwinBlock expects width {self.dim}, got map of shape {x.shape}")
        s = self.shift_size
        y = self.norm1(x)
        if s:
            y = cyclic_shift(y, -s, -s)
        windows = self.attn(window_partition(y, self.window_size), self.attn_mask)
        y = window_reverse(windows, h, w, self.window_size)
        if s:
            y = cyclic_shift(y, s, s)
        x = ops.add(x, y)
        return ops.add(x, self.mlp(self.norm2(x)))


class PatchMerging(Module):
    """
    Concatenate each 2x2 neighbourhood to 4C, normalize, reduce to 2C.

    Channel order of the concatenation: (0,0), (1,0), (0,1), (1,1) as
    (row, col) offsets inside the neighbourhood.
    """

    def __init__(self, dim: int, rng: np.random.Generator):
        super().__init__()
        self.dim = dim
        self.norm = LayerNorm(4 * dim)
        self.reduction = Linear(4 * dim, 2 * dim, rng, bias=False)

    def forward(self, x: Tensor) -> Tensor:
        b, h, w, c = x.shape
        if h % 2 or w % 2:
            raise ConfigError(f"Cannot merge an odd-sided {h}x{w} map")
        x = ops.reshape(x, (b, h // 2, 2, w // 2, 2, c))
        x = ops.permute(x, (0, 1, 3, 4, 2, 5))
        x = ops.reshape(x, (b, h // 2, w // 2, 4 * c))
        return self.reduction(self.norm(x))
