"""
Dataset container and KDST dataset files for swinalign.

KDST layout (little-endian):
    magic "KDST" | version u32 | split u8 | N u32 | N x label u8 | KTEN images
"""

import struct
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from swinalign.io.kten import (
    PathLike,
    check_magic,
    check_version,
    decode_tensor,
    encode_tensor,
    read_u32,
    write_bytes,
)
from swinalign.utils.constants import FORMAT_VERSION, Magic, Splits
from swinalign.utils.errors import DimensionError, FormatError, SpecError

_U32 = struct.Struct("<I")


@dataclass
class Dataset:
    """
    Labeled images of one split.

    Attributes:
        images (np.ndarray): (N, H, W, C) float64 pixels.
        labels (np.ndarray): (N,) integer grades.
        split (str): One of Splits.ALL.
    """
    images: np.ndarray
    labels: np.ndarray
    split: str = Splits.TRAIN

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise DimensionError(f"Images must be (N, H, W, C), got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise DimensionError(
                f"{self.images.shape[0]} images but labels shaped {self.labels.shape}"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() > 255):
            raise SpecError("Labels must be grades in [0, 255]")
        if self.split not in Splits.ALL:
            raise SpecError(f"Unknown split '{self.split}'. Expected one of {Splits.ALL}.")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, indices, split: Optional[str] = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices], split or self.split)

    def grade_counts(self, num_classes: int) -> np.ndarray:
        return np.bincount(self.labels, minlength=num_classes)

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """
        Yield (images, labels) mini-batches; shuffled when ``rng`` is given.
        """
        if batch_size <= 0:
            raise ValueError("batch_size must be positive")
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for start in range(0, len(self), batch_size):
            chunk = order[start:start + batch_size]
            yield self.images[chunk], self.labels[chunk]


def encode_dataset(dataset: Dataset) -> bytes:
    return b"".join([
        Magic.DATASET,
        _U32.pack(FORMAT_VERSION),
        bytes([Splits.ALL.index(dataset.split)]),
        _U32.pack(len(dataset)),
        dataset.labels.astype(np.uint8).tobytes(),
        encode_tensor(dataset.images),
    ])


def decode_dataset(buffer: bytes) -> Dataset:
    offset = check_magic(buffer, 0, Magic.DATASET)
    offset = check_version(buffer, offset, "KDST")
    if offset + 1 > len(buffer):
        raise FormatError("Truncated split tag", offset)
    tag = buffer[offset]
    if tag >= len(Splits.ALL):
        raise FormatError(f"Unknown split tag {tag}", offset)
    offset += 1
    count, offset = read_u32(buffer, offset, "KDST sample count")
    if offset + count > len(buffer):
        raise FormatError(f"Truncated label block: need {count} bytes", offset)
    labels = np.zeros(0, dtype=np.int64)
    if count:
        labels = np.frombuffer(buffer, dtype=np.uint8, count=count, offset=offset).astype(np.int64)
    offset += count
    images, end = decode_tensor(buffer, offset)
    if end != len(buffer):
        raise FormatError(f"{len(buffer) - end} trailing bytes after the image record", end)
    if images.ndim != 4 or images.shape[0] != count:
        raise FormatError(f"Image record shaped {images.shape} does not hold {count} images", offset)
    return Dataset(images, labels, Splits.ALL[tag])


def save_dataset(dataset: Dataset, path: PathLike) -> None:
    write_bytes(path, encode_dataset(dataset))


def load_dataset(path: PathLike) -> Dataset:
    """
    :raises FormatError: On bad magic or truncation; nothing is returned partially.
    """
    with open(path, "rb") as f:
        return decode_dataset(f.read())
