"""
Task losses, the negative-cosine regularizer and their combination.
"""

from swinalign.losses.bce import bce, categorical_cross_entropy, mse, one_hot
from swinalign.losses.ncsl import ncsl
from swinalign.losses.objective import LossConfig, LossReport, compute_objective, total_loss

__all__ = [
    "LossConfig",
    "LossReport",
    "bce",
    "categorical_cross_entropy",
    "compute_objective",
    "mse",
    "ncsl",
    "one_hot",
    "total_loss",
]
