"""
Parameter initializers.
"""

from typing import Sequence

import numpy as np


def trunc_normal(rng: np.random.Generator, shape: Sequence[int], std: float = 0.02, bound: float = 2.0) -> np.ndarray:
    """
    Normal(0, std) samples truncated to [-bound*std, bound*std] by resampling.

    :param rng: Source of randomness; the draw order is deterministic.
    :param shape: Output shape.
    :param std: Standard deviation before truncation.
    :param bound: Truncation point in units of std.
    """
    values = rng.normal(0.0, std, size=tuple(shape))
    limit = bound * std
    outside = np.abs(values) > limit
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > limit
    return values
