"""
Synthetic grading benchmark for swinalign.

A grade-g image holds two horizontal bright bands whose gap narrows by
``global_gap`` pixels per grade (a global shape cue) and a sinusoidal texture
inside the bands whose spatial frequency grows by ``texture_freq_step`` per
grade (a local cue), plus gaussian noise. Pixels are clipped to [0, 1] and the
single channel is replicated ``channels`` times.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from swinalign.data.dataset import Dataset
from swinalign.utils.constants import NUM_GRADES, Splits
from swinalign.utils.errors import SpecError

logger = logging.getLogger(__name__)

BACKGROUND = 0.1
BAND_LEVEL = 0.6

# 100 train, 20 val and 20 test images per grade out of 140.
DEFAULT_FRACTIONS = (100 / 140, 20 / 140, 20 / 140)


@dataclass
class SyntheticSpec:
    """
    Parameters of the generator. Lengths are in pixels, frequencies in
    cycles per pixel.
    """
    num_samples: int = 140
    image_size: int = 64
    num_classes: int = NUM_GRADES
    seed: int = 0
    global_gap: int = 3
    texture_freq_step: float = 0.05
    noise_sigma: float = 0.25
    base_gap: int = 16
    band_height: int = 8
    base_freq: float = 0.08
    texture_amplitude: float = 0.3
    jitter: int = 4
    channels: int = 3

    def __post_init__(self):
        if self.num_samples <= 0:
            raise SpecError("num_samples per grade must be positive.")
        if self.num_classes < 2:
            raise SpecError("At least two grades are required.")
        if self.noise_sigma < 0:
            raise SpecError("noise_sigma must be non-negative.")
        if self.global_gap < 0 or self.band_height <= 0 or self.jitter < 0 or self.channels <= 0:
            raise SpecError("global_gap, jitter must be non-negative; band_height, channels positive.")
        if not 0 <= self.texture_amplitude < BAND_LEVEL - BACKGROUND:
            raise SpecError(f"texture_amplitude must lie in [0, {BAND_LEVEL - BACKGROUND}).")
        if self.gap(self.num_classes - 1) < 1:
            raise SpecError(
                f"Band gap underflows: {self.base_gap} - {self.num_classes - 1} * {self.global_gap} < 1 pixel"
            )
        if 2 * self.band_height + self.gap(0) + 2 * self.jitter > self.image_size:
            raise SpecError("Bands, gap and jitter do not fit inside the image.")

    def gap(self, grade: int) -> int:
        return self.base_gap - grade * self.global_gap

    def frequency(self, grade: int) -> float:
        return self.base_freq + grade * self.texture_freq_step


def render(spec: SyntheticSpec, grade: int, rng: np.random.Generator) -> np.ndarray:
    """One noisy single-channel (H, W) image of ``grade``."""
    size = spec.image_size
    gap = spec.gap(grade)
    offset = int(rng.integers(-spec.jitter, spec.jitter + 1)) if spec.jitter else 0
    phase = rng.uniform(0.0, 2.0 * np.pi)
    top = (size - 2 * spec.band_height - gap) // 2 + offset
    bottom = top + spec.band_height + gap

    image = np.full((size, size), BACKGROUND)
    columns = np.arange(size)
    texture = BAND_LEVEL + spec.texture_amplitude * np.sin(2.0 * np.pi * spec.frequency(grade) * columns + phase)
    image[top:top + spec.band_height, :] = texture
    image[bottom:bottom + spec.band_height, :] = texture
    if spec.noise_sigma > 0:
        image = image + rng.normal(0.0, spec.noise_sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def generate(spec: SyntheticSpec) -> Dataset:
    """
    Balanced dataset of ``num_samples`` images per grade, a pure function of
    ``spec`` and its seed.
    """
    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(spec.num_classes), spec.num_samples)
    labels = labels[rng.permutation(labels.size)]
    images = np.empty((labels.size, spec.image_size, spec.image_size, spec.channels))
    for n, grade in enumerate(labels):
        images[n] = render(spec, int(grade), rng)[:, :, None]
    logger.debug("Generated %d synthetic images of side %d", labels.size, spec.image_size)
    return Dataset(images, labels, Splits.TRAIN)


def split(
    dataset: Dataset,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> Tuple[Dataset, Dataset, Dataset]:
    """
    Stratified train/val/test split.

    Per grade, the first two counts are round(fraction * n) and the test split
    takes the remainder. Samples keep their original relative order.
    """
    fractions = [float(f) for f in fractions]
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise SpecError(f"Expected three non-negative fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise SpecError(f"Split fractions must sum to 1, got {sum(fractions)}")
    rng = np.random.default_rng(seed)
    parts = [[], [], []]
    for grade in np.unique(dataset.labels):
        members = np.flatnonzero(dataset.labels == grade)
        members = members[rng.permutation(members.size)]
        n_train = int(round(fractions[0] * members.size))
        n_val = min(int(round(fractions[1] * members.size)), members.size - n_train)
        parts[0].append(members[:n_train])
        parts[1].append(members[n_train:n_train + n_val])
        parts[2].append(members[n_train + n_val:])
    return tuple(
        dataset.subset(np.sort(np.concatenate(part)).astype(np.int64), tag)
        for part, tag in zip(parts, Splits.ALL)
    )
