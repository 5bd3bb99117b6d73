"""
Modules and layers built on the autodiff tensor.
"""

from swinalign.nn.layers import LayerNorm, Linear, Mlp
from swinalign.nn.module import Module

__all__ = ["LayerNorm", "Linear", "Mlp", "Module"]
