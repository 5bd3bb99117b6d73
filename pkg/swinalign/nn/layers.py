"""
Building-block layers for swinalign.
"""

from typing import Optional

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Parameter, Tensor
from swinalign.nn.init import trunc_normal
from swinalign.nn.module import Module
from swinalign.utils.errors import DimensionError


class Linear(Module):
    """
    Affine map y = x W + b applied to the last axis.

    Weight is stored (in_features, out_features); leading axes of the input
    are flattened explicitly before the product and restored after it.
    """

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
        std: float = 0.02,
    ):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(trunc_normal(rng, (in_features, out_features), std))
        self.bias: Optional[Parameter] = None
        if bias:
            self.bias = Parameter(np.zeros(out_features))

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise DimensionError(
                f"Linear expects last extent {self.in_features}, got input of shape {x.shape}"
            )
        lead = x.shape[:-1]
        rows = int(np.prod(lead)) if lead else 1
        out = ops.matmul(ops.reshape(x, (rows, self.in_features)), self.weight)
        if self.bias is not None:
            out = ops.add(out, ops.expand(self.bias, out.shape))
        return ops.reshape(out, lead + (self.out_features,))


class LayerNorm(Module):
    """Layer normalization over the last axis with an optional learned affine."""

    def __init__(self, dim: int, affine: bool = True, eps: float = ops.LN_EPS):
        super().__init__()
        self.dim = dim
        self.eps = eps
        self.affine = affine
        if affine:
            self.weight = Parameter(np.ones(dim))
            self.bias = Parameter(np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        out = ops.layer_normalize(x, axis=-1, eps=self.eps)
        if self.affine:
            out = ops.add(ops.mul(out, ops.expand(self.weight, out.shape)), ops.expand(self.bias, out.shape))
        return out


class Mlp(Module):
    """Two linear layers with gelu in between: dim -> hidden -> out."""

    def __init__(self, dim: int, hidden: int, out: int, rng: np.random.Generator):
        super().__init__()
        self.fc1 = Linear(dim, hidden, rng)
        self.fc2 = Linear(hidden, out, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(ops.gelu(self.fc1(x)))
