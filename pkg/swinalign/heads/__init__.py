"""
Prediction heads: per-grade decision makers and the ablation variants.
"""

from swinalign.heads.head import HeadConfig, HeadOutputs, PredictionHead, decide_grade
from swinalign.heads.mphn import (
    ClassifierHead,
    MultiPredictionHead,
    aggregate_decision_features,
    head_forward,
    predict,
)
from swinalign.heads.regressor import MLPRegressorHead, regressor_decide, regressor_forward
from swinalign.heads.registry import HeadRegistry, default_registry
from swinalign.heads.sphn import SinglePredictionHead, sphn_forward

__all__ = [
    "ClassifierHead",
    "HeadConfig",
    "HeadOutputs",
    "HeadRegistry",
    "MLPRegressorHead",
    "MultiPredictionHead",
    "PredictionHead",
    "SinglePredictionHead",
    "aggregate_decision_features",
    "decide_grade",
    "default_registry",
    "head_forward",
    "predict",
    "regressor_decide",
    "regressor_forward",
    "sphn_forward",
]
