"""
WindowAttention for swinalign.

Multi-head self-attention restricted to the tokens of one window, with a
learned relative position bias per head. Windows are processed as a batch
and never exchange information.
"""

from typing import Optional

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Parameter, Tensor
from swinalign.backbone.windows import relative_position_index
from swinalign.nn.layers import Linear
from swinalign.nn.module import Module
from swinalign.utils.errors import ConfigError, DimensionError


class WindowAttention(Module):
    """
    Window multi-head self-attention.

    :param dim: Token width C.
    :param window_size: Window side w; windows hold w*w tokens.
    :param num_heads: Head count h; C must be divisible by h.
    :param rng: Initialization randomness.
    """

    def __init__(self, dim: int, window_size: int, num_heads: int, rng: np.random.Generator):
        super().__init__()
        if num_heads < 1 or dim % num_heads:
            raise ConfigError(f"Width {dim} is not divisible by {num_heads} heads.")
        self.dim = dim
        self.window_size = window_size
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.scale = self.head_dim ** -0.5
        self.qkv = Linear(dim, 3 * dim, rng)
        self.relative_position_bias_table = Parameter(
            np.zeros(((2 * window_size - 1) ** 2, num_heads))
        )
        self.proj = Linear(dim, dim, rng)
        self._bias_index = relative_position_index(window_size).reshape(-1)
        self.last_attention: Optional[np.ndarray] = None

    def position_bias(self) -> Tensor:
        """Bias tensor (h, N, N) gathered from the table."""
        tokens = self.window_size * self.window_size
        bias = ops.gather(self.relative_position_bias_table, self._bias_index)
        bias = ops.reshape(bias, (tokens, tokens, self.num_heads))
        return ops.permute(bias, (2, 0, 1))

    def forward(self, windows: Tensor, mask: Optional[Tensor] = None) -> Tensor:
        """
        :param windows: Tokens (B * nW, N, C).
        :param mask: Optional additive mask (nW, N, N), repeated over the batch.
        :return: Tensor with the shape of ``windows``.
        """
        count, tokens, dim = windows.shape
        if dim != self.dim or tokens != self.window_size * self.window_size:
            raise DimensionError(
                f"WindowAttention expects (*, {self.window_size ** 2}, {self.dim}), got {windows.shape}"
            )
        heads, head_dim = self.num_heads, self.head_dim

        qkv = ops.reshape(self.qkv(windows), (count, tokens, 3, heads, head_dim))
        qkv = ops.permute(qkv, (2, 0, 3, 1, 4))
        q, k, v = (ops.reshape(part, (count, heads, tokens, head_dim)) for part in ops.split(qkv, 3, axis=0))

        logits = ops.matmul(ops.scale(q, self.scale), ops.permute(k, (0, 1, 3, 2)))
        logits = ops.add(logits, ops.expand(self.position_bias(), logits.shape))
        if mask is not None:
            n_windows = mask.shape[0]
            if count % n_windows or mask.shape[1:] != (tokens, tokens):
                raise DimensionError(f"Mask {mask.shape} does not fit {count} windows of {tokens} tokens")
            full = np.broadcast_to(mask.data[None, :, None], (count // n_windows, n_windows, heads, tokens, tokens))
            logits = ops.add(logits, Tensor(full.reshape(count, heads, tokens, tokens)))
        attention = ops.softmax(logits, axis=-1)
        self.last_attention = attention.data

        out = ops.matmul(attention, v)
        out = ops.reshape(ops.permute(out, (0, 2, 1, 3)), (count, tokens, dim))
        return self.proj(out)
