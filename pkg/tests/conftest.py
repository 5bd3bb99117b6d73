import numpy as np
import pytest

from swinalign.backbone.config import BackboneConfig
from swinalign.config import ExperimentConfig, TrainingConfig
from swinalign.data.synthetic import SyntheticSpec
from swinalign.fusion.projection import FusionConfig
from swinalign.heads.head import HeadConfig
from swinalign.losses.objective import LossConfig
from swinalign.model import ModelConfig, SwinAlignModel


def micro_backbone() -> BackboneConfig:
    return BackboneConfig(
        image_size=16, in_channels=3, patch_size=4, embed_dim=8,
        depths=[1, 1], num_heads=[1, 2], window_size=2, mlp_ratio=4.0,
    )


def micro_model_config(kind: str = "mphn") -> ModelConfig:
    return ModelConfig(
        backbone=micro_backbone(),
        fusion=FusionConfig(embed_dim=8),
        head=HeadConfig(kind=kind, num_classes=5, hidden_dim=16),
    )


def tiny_spec(**overrides) -> SyntheticSpec:
    values = dict(
        num_samples=4, image_size=16, seed=0, global_gap=1, texture_freq_step=0.1,
        noise_sigma=0.05, base_gap=6, band_height=2, base_freq=0.1, jitter=1,
    )
    values.update(overrides)
    return SyntheticSpec(**values)


def micro_experiment(**overrides) -> ExperimentConfig:
    values = dict(
        seed=0,
        backbone=micro_backbone(),
        fusion=FusionConfig(embed_dim=8),
        head=HeadConfig(kind="mphn", num_classes=5, hidden_dim=16),
        loss=LossConfig(lambda_=0.1),
        training=TrainingConfig(epochs=1, batch_size=4, patience=5, eval_batch_size=8),
        data=tiny_spec(),
    )
    values.update(overrides)
    return ExperimentConfig(**values)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=["mphn", "sphn", "mlpreg"])
def head_kind(request):
    return request.param


@pytest.fixture
def micro_model():
    return SwinAlignModel(micro_model_config(), seed=0)


@pytest.fixture
def micro_images(rng):
    return rng.uniform(0.0, 1.0, size=(2, 16, 16, 3))


@pytest.fixture
def experiment():
    return micro_experiment()
