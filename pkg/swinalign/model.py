"""
SwinAlignModel for swinalign.

Backbone, per-stage projection heads and a prediction head assembled into one
Module. Parameter names are the checkpoint layout:

    patch_embed.proj.*, stage{s}.block{j}.*, stage{s}.merge.*   backbone
    proj.stage{s}.layer{i}.*                                    projections
    head{k}.layer{i}.*, head{k}.omega                           mphn
    sphn.layer{i}.*  /  reg.layer{i}.*                          sphn / mlpreg
"""

import logging
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple, Union

import numpy as np

from swinalign.autodiff.gradcheck import GradCheckReport, finite_diff_check
from swinalign.autodiff.tensor import Tensor, no_grad
from swinalign.backbone.config import BackboneConfig
from swinalign.backbone.swin import BackboneOutput, SwinBackbone
from swinalign.fusion.projection import FeatureFusion, FusedFeatures, FusionConfig
from swinalign.heads.head import HeadConfig, HeadOutputs, PredictionHead
from swinalign.heads.registry import HeadRegistry, default_registry
from swinalign.losses.objective import LossConfig, LossReport, compute_objective
from swinalign.nn.module import Module
from swinalign.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class ModelConfig:
    """
    The architecture part of an experiment.
    """
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    head: HeadConfig = field(default_factory=HeadConfig)


@dataclass
class ModelOutputs:
    """
    Attributes:
        stages (BackboneOutput): Stage maps O_1..O_S.
        fused (FusedFeatures): Projections P_s and their concatenation C.
        head (HeadOutputs): Scores, probabilities and decision features.
    """
    stages: BackboneOutput
    fused: FusedFeatures
    head: HeadOutputs


class SwinAlignModel(Module):
    """
    Hierarchical windowed-attention classifier with stage-feature alignment.

    :param config: Architecture configuration.
    :param seed: Initialization seed; equal seeds give bitwise-equal weights.
    :param registry: Where head kinds are looked up.
    """

    def __init__(self, config: ModelConfig, seed: int = 0, registry: Optional[HeadRegistry] = None):
        super().__init__()
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.backbone = SwinBackbone(config.backbone, rng)
        self.proj = FeatureFusion(config.backbone, config.fusion, rng)
        head = (registry or default_registry).create(
            config.head, self.proj.output_dim, config.fusion.embed_dim, rng
        )
        setattr(self, head.attribute_name, head)
        self._head_attribute = head.attribute_name
        self.assign_names()
        logger.debug(
            "Built %s model with %d parameters (seed %d)", config.head.kind, self.num_parameters(), seed
        )

    @property
    def head(self) -> PredictionHead:
        return getattr(self, self._head_attribute)

    @property
    def kind(self) -> str:
        return self.head.kind

    @property
    def num_classes(self) -> int:
        return self.head.num_classes

    def forward(self, images: Union[Tensor, np.ndarray]) -> ModelOutputs:
        """
        :param images: (B, H, W, Cin) batch.
        """
        if not isinstance(images, Tensor):
            images = Tensor(images)
        return self.from_stages(self.backbone(images))

    def from_stages(self, stages: BackboneOutput) -> ModelOutputs:
        """Projections and head on top of already computed stage maps."""
        fused = self.proj(stages)
        return ModelOutputs(stages, fused, self.head(fused.concatenated))

    def objective(self, outputs: ModelOutputs, labels, config: LossConfig) -> Tuple[Tensor, LossReport]:
        return compute_objective(outputs.fused.projected, outputs.head, labels, config, self.num_classes)

    def decide(self, outputs: ModelOutputs) -> np.ndarray:
        return np.asarray(self.head.decide(outputs.head), dtype=np.int64)

    def predict(self, images, batch_size: int = 64) -> np.ndarray:
        """Grades for a stack of images, computed without recording."""
        images = np.asarray(images, dtype=np.float64)
        grades = []
        with no_grad():
            for start in range(0, images.shape[0], batch_size):
                grades.append(self.decide(self(images[start:start + batch_size])))
        if not grades:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(grades)

    def feature_parameter_names(self) -> List[str]:
        """Backbone and projection parameters, i.e. everything but the head."""
        head = {id(p) for p in self.head.parameters()}
        return [name for name, p in self.named_parameters() if id(p) not in head]

    def load_feature_extractor(self, state: Mapping[str, np.ndarray]) -> List[str]:
        """
        Copy backbone and projection weights out of a checkpoint.

        The checkpoint may come from a model with a different head kind; this
        model's head keeps its own initialization.

        :param state: Parameter name to value, e.g. from ``load_checkpoint``.
        :return: The names that were loaded.
        :raises ConfigError: When the checkpoint lacks a feature parameter.
        :raises DimensionError: When a stored shape differs from this model's.
        """
        names = self.feature_parameter_names()
        missing = [name for name in names if name not in state]
        if missing:
            raise ConfigError(f"Checkpoint lacks feature parameters {missing[:3]}{'...' if len(missing) > 3 else ''}")
        self.load_state_dict({name: state[name] for name in names}, strict=False)
        logger.info("Initialized %d feature parameters from a checkpoint", len(names))
        return names


def check_model_gradients(
    model: SwinAlignModel,
    images,
    labels,
    loss_config: LossConfig,
    h: float = 1e-5,
    tol: float = 1e-4,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Finite-difference check of the training objective over model parameters.

    Parameters are checked in segments: patch embedding with stage 1, then
    each later stage, then projections and head. Perturbed evaluations of a
    segment restart the forward from the unperturbed stage maps that precede
    it, which those parameters cannot reach.

    :param max_entries: Entries sampled per parameter; None checks every entry.
    :return: The combined GradCheckReport.
    """
    images = images if isinstance(images, Tensor) else Tensor(images)
    with no_grad():
        base = model.backbone(images).stage_maps

    def loss_from(stages: BackboneOutput) -> Tensor:
        loss, _ = model.objective(model.from_stages(stages), labels, loss_config)
        return loss

    segments = [(
        model.backbone.patch_embed.parameters() + model.backbone.stages[0].parameters(),
        lambda: loss_from(model.backbone(images)),
    )]
    for s in range(1, len(model.backbone.stages)):
        segments.append((
            model.backbone.stages[s].parameters(),
            lambda s=s: loss_from(model.backbone.resume(base[:s])),
        ))
    backbone = {id(p) for p in model.backbone.parameters()}
    segments.append((
        [p for p in model.parameters() if id(p) not in backbone],
        lambda: loss_from(BackboneOutput(list(base))),
    ))

    report = None
    for parameters, f in segments:
        part = finite_diff_check(f, parameters, h=h, tol=tol, max_entries=max_entries, seed=seed)
        report = part if report is None else report.merge(part)
    return report
