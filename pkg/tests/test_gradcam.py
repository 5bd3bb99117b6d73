import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swinalign.backbone.config import BackboneConfig
from swinalign.config import TrainingConfig
from swinalign.data import generate, split
from swinalign.io import load_tensor
from swinalign.training.gradcam import (
    encode_pgm,
    gradcam,
    gradcam_batch,
    gradcam_from_activations,
    grade_panel,
    upsample,
    write_gradcam,
    write_panel,
)
from swinalign.training.optimizer import OptimizerConfig
from swinalign.training.trainer import Trainer
from swinalign.utils.errors import DimensionError

from conftest import micro_experiment, tiny_spec


def test_uniform_activations_give_a_flat_map():
    cam = gradcam_from_activations(np.ones((3, 3, 4)), np.ones((3, 3, 4)))
    assert_array_equal(cam, np.ones((3, 3)))


def test_map_is_normalized_and_scale_invariant(rng):
    activations = rng.normal(size=(2, 4, 4, 6))
    gradients = rng.normal(size=(2, 4, 4, 6))
    cam = gradcam_from_activations(activations, gradients)
    assert cam.shape == (2, 4, 4)
    assert cam.min() >= 0.0 and cam.max() <= 1.0
    for c in (0.01, 7.0):
        assert_allclose(gradcam_from_activations(activations, c * gradients), cam, atol=1e-12)


def test_negative_evidence_gives_an_all_zero_map():
    cam = gradcam_from_activations(np.ones((2, 2, 1)), -np.ones((2, 2, 1)))
    assert_array_equal(cam, np.zeros((2, 2)))


def test_mismatched_shapes():
    with pytest.raises(DimensionError):
        gradcam_from_activations(np.ones((2, 2, 3)), np.ones((2, 2, 2)))


@pytest.mark.parametrize("grade", [0, 4])
def test_model_heat_map(micro_model, micro_images, grade):
    cam = gradcam(micro_model, micro_images[0], grade)
    assert cam.shape == (2, 2)
    assert cam.min() >= 0.0
    assert cam.max() == pytest.approx(1.0) or not cam.any()
    assert all(p.grad is None for p in micro_model.parameters())


def test_batch_matches_single_images(micro_model, micro_images):
    batch = gradcam_batch(micro_model, micro_images, 2)
    assert batch.shape == (2, 2, 2)
    assert_allclose(batch[1], gradcam(micro_model, micro_images[1], 2), atol=1e-12)


def test_grade_out_of_range(micro_model, micro_images):
    with pytest.raises(ValueError):
        gradcam(micro_model, micro_images[0], 5)


def test_upsample():
    cam = np.array([[0.0, 1.0], [0.5, 0.25]])
    big = upsample(cam, 4)
    assert big.shape == (4, 4)
    assert_array_equal(big[:2, 2:], np.ones((2, 2)))
    with pytest.raises(DimensionError):
        upsample(cam, 5)


def test_pgm_encoding():
    payload = encode_pgm(np.array([[0.0, 1.0, 0.5]]))
    header = b"P5\n3 1\n255\n"
    assert payload[:len(header)] == header
    assert list(payload[len(header):]) == [0, 255, 128]


def test_written_files(tmp_path, rng):
    cam = rng.uniform(size=(2, 2))
    kten, pgm = write_gradcam(cam, str(tmp_path / "cam"), image_size=16)
    assert_array_equal(load_tensor(kten), cam)
    assert (tmp_path / "cam.pgm").read_bytes().startswith(b"P5\n16 16\n255\n")
    assert len((tmp_path / "cam.pgm").read_bytes()) == len(b"P5\n16 16\n255\n") + 256


def test_grade_panel(micro_model, tmp_path):
    dataset = generate(tiny_spec(num_samples=1))
    panel = grade_panel(micro_model, dataset)
    assert panel.shape == (32, 80)
    assert panel.min() >= 0.0 and panel.max() <= 1.0
    path = write_panel(micro_model, dataset, str(tmp_path / "panels" / "grades.pgm"))
    assert open(path, "rb").read().startswith(b"P5\n80 32\n255\n")


@pytest.fixture(scope="module")
def trained():
    train_set, _, test_set = split(generate(tiny_spec(num_samples=10)))
    config = micro_experiment(
        backbone=BackboneConfig(
            image_size=16, in_channels=3, patch_size=2, embed_dim=8,
            depths=[1, 1], num_heads=[1, 2], window_size=2, mlp_ratio=4.0,
        ),
        optimizer=OptimizerConfig(lr=1e-2),
        training=TrainingConfig(epochs=5, batch_size=8, patience=5, eval_batch_size=16),
    )
    return Trainer(config).fit(train_set).model, test_set


def test_trained_maps_depend_on_the_grade(trained):
    model, test_set = trained
    first, last = (gradcam_batch(model, test_set.images, k) for k in (0, 4))
    assert first.shape == last.shape == (len(test_set), 4, 4)
    for cam in (first, last):
        assert cam.min() >= 0.0
        peaks = cam.max(axis=(1, 2))
        assert np.all((peaks == 0.0) | np.isclose(peaks, 1.0))
    differ = [not np.array_equal(a, b) for a, b in zip(first, last)]
    assert np.mean(differ) >= 0.9
