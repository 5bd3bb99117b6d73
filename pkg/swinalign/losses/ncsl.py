"""
Negative cosine similarity between stage projections and decision features.

The decision features pass through stop_gradient, so the regularizer pulls the
stage projections (and through them the backbone) toward the classifier's
decision-feature direction without moving the classifier.
"""

from typing import Sequence

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.utils.errors import DimensionError


def cosine(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise cosine of two (B, d) tensors, as (B,)."""
    return ops.reduce_sum(ops.mul(ops.l2_normalize(a, axis=-1), ops.l2_normalize(b, axis=-1)), axis=-1)


def ncsl(projections: Sequence[Tensor], decision: Tensor) -> Tensor:
    """
    -(1/S) * sum_s cos(P_s, sg(D)), averaged over the batch.

    :param projections: S tensors (B, d_e).
    :param decision: Aggregated decision features D, (B, d_e).
    :return: Scalar in [-1, 1].
    """
    projections = list(projections)
    if not projections:
        raise DimensionError("ncsl needs at least one stage projection")
    if decision.ndim != 2:
        raise DimensionError(f"ncsl expects D shaped (B, d_e), got {decision.shape}")
    for p in projections:
        if p.shape != decision.shape:
            raise DimensionError(f"ncsl: projection {p.shape} does not match D {decision.shape}")
    target = ops.stop_gradient(decision)
    similarity = cosine(projections[0], target)
    for p in projections[1:]:
        similarity = ops.add(similarity, cosine(p, target))
    per_sample = ops.scale(similarity, -1.0 / len(projections))
    value = ops.mean_over_axis(per_sample, axis=0)
    return ops.clip(value, -1.0, 1.0)
