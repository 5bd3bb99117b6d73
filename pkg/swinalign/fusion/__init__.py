"""
Stage pooling, projection heads and concatenation.
"""

from swinalign.fusion.projection import (
    FeatureFusion,
    FusedFeatures,
    FusionConfig,
    ProjectionHead,
    fuse,
    pool_normalize,
    project,
)

__all__ = [
    "FeatureFusion",
    "FusedFeatures",
    "FusionConfig",
    "ProjectionHead",
    "fuse",
    "pool_normalize",
    "project",
]
