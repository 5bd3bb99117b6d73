"""
Hierarchical windowed-attention feature extractor.
"""

from swinalign.backbone.config import BackboneConfig
from swinalign.backbone.swin import BackboneOutput, SwinBackbone, backbone_forward

__all__ = ["BackboneConfig", "BackboneOutput", "SwinBackbone", "backbone_forward"]
