"""
GradCAM saliency for swinalign.

The head's differentiable score for grade k (the pre-sigmoid omega_k . D_k for
mphn, the grade logit for sphn, -(y_hat - k)^2 for mlpreg) is differentiated
with respect to the final stage map O_S. Channel weights are the spatial mean
of that gradient; the map is relu(sum_c weight_c * O_S[..., c]), divided by its
maximum when the maximum is positive.
"""

import logging
import os
from typing import List, Optional

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tape, Tensor
from swinalign.data.dataset import Dataset
from swinalign.io.kten import save_tensor, write_bytes
from swinalign.model import SwinAlignModel
from swinalign.utils.errors import DimensionError

logger = logging.getLogger(__name__)


def gradcam_from_activations(activations: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """
    :param activations: (H, W, C) or (B, H, W, C) final-stage map.
    :param gradients: Gradient of the score with respect to it, same shape.
    :return: (H, W) or (B, H, W) map in [0, 1].
    """
    activations = np.asarray(activations, dtype=np.float64)
    gradients = np.asarray(gradients, dtype=np.float64)
    if activations.shape != gradients.shape or activations.ndim not in (3, 4):
        raise DimensionError(
            f"GradCAM needs matching (H, W, C) maps, got {activations.shape} and {gradients.shape}"
        )
    weights = gradients.mean(axis=(-3, -2), keepdims=True)
    cam = np.maximum((weights * activations).sum(axis=-1), 0.0)
    peak = cam.max(axis=(-2, -1), keepdims=True)
    return np.where(peak > 0, cam / np.where(peak > 0, peak, 1.0), cam)


def gradcam_batch(model: SwinAlignModel, images: np.ndarray, grade: int) -> np.ndarray:
    """
    GradCAM of every image in a batch, conditioned on the same grade.

    :param images: (B, H, W, Cin).
    :return: (B, H_S, W_S).
    """
    if not 0 <= grade < model.num_classes:
        raise ValueError(f"Grade {grade} is out of range for {model.num_classes} grades")
    with Tape() as tape:
        outputs = model(Tensor(images))
        final = outputs.stages.final.retain_grad()
        score = ops.reduce_sum(model.head.score(outputs.head, grade))
        tape.backward(score)
    gradients = final.grad if final.grad is not None else np.zeros_like(final.data)
    for p in model.parameters():
        p.grad = None
    return gradcam_from_activations(final.data, gradients)


def gradcam(model: SwinAlignModel, image: np.ndarray, grade: int) -> np.ndarray:
    """
    :param image: One (H, W, Cin) image.
    :return: (H_S, W_S) heat map.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise DimensionError(f"gradcam expects one (H, W, C) image, got {image.shape}")
    return gradcam_batch(model, image[None], grade)[0]


def upsample(cam: np.ndarray, size: int) -> np.ndarray:
    """Nearest-neighbour upsampling of an (h, w) map to (size, size)."""
    h, w = cam.shape
    if size % h or size % w:
        raise DimensionError(f"Cannot upsample a {h}x{w} map to {size}x{size}")
    return np.repeat(np.repeat(cam, size // h, axis=0), size // w, axis=1)


def grade_panel(model: SwinAlignModel, dataset: Dataset) -> np.ndarray:
    """
    Two-row strip: per grade, the first image of that grade on top and its
    upsampled GradCAM (conditioned on that grade) below. Missing grades are
    left black.

    :return: (2 * H, K * W) array in [0, 1].
    """
    size = dataset.images.shape[1]
    panel = np.zeros((2 * size, model.num_classes * size))
    for grade in range(model.num_classes):
        members = np.flatnonzero(dataset.labels == grade)
        if members.size == 0:
            continue
        image = dataset.images[members[0]]
        columns = slice(grade * size, (grade + 1) * size)
        panel[:size, columns] = np.clip(image[..., 0], 0.0, 1.0)
        panel[size:, columns] = upsample(gradcam(model, image, grade), size)
    return panel


def encode_pgm(image: np.ndarray) -> bytes:
    """8-bit binary PGM (P5) of an (H, W) array with values in [0, 1]."""
    if image.ndim != 2:
        raise DimensionError(f"PGM needs a 2-D array, got {image.shape}")
    pixels = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def write_gradcam(cam: np.ndarray, prefix: str, image_size: Optional[int] = None) -> List[str]:
    """
    Write ``<prefix>.kten`` (the raw map) and ``<prefix>.pgm`` (its rendering,
    upsampled to ``image_size`` when given).

    :return: The written paths.
    """
    kten_path, pgm_path = prefix + ".kten", prefix + ".pgm"
    save_tensor(kten_path, cam)
    rendered = upsample(cam, image_size) if image_size else cam
    write_bytes(pgm_path, encode_pgm(rendered))
    logger.info("Wrote GradCAM map to %s and %s", kten_path, pgm_path)
    return [kten_path, pgm_path]


def write_panel(model: SwinAlignModel, dataset: Dataset, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    write_bytes(path, encode_pgm(grade_panel(model, dataset)))
    logger.info("Wrote per-grade GradCAM panel to %s", path)
    return path
