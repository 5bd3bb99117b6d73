"""
Reverse-mode differentiation over dense float64 tensors.
"""

from swinalign.autodiff.tensor import (
    Parameter,
    Tape,
    Tensor,
    backward,
    current_tape,
    no_grad,
)
from swinalign.autodiff.gradcheck import GradCheckReport, finite_diff_check

__all__ = [
    "Parameter",
    "Tape",
    "Tensor",
    "backward",
    "current_tape",
    "no_grad",
    "GradCheckReport",
    "finite_diff_check",
]
