"""
Window utilities for windowed self-attention.

Feature maps are batched, shaped (B, H, W, C). Windows are numbered row-major
within each image and images are kept contiguous, so a partitioned batch has
shape (B * nW, w * w, C) with nW = (H / w) * (W / w).
"""

import numpy as np

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Tensor
from swinalign.utils.errors import ConfigError, DimensionError

MASK_VALUE = -1e9


def _check_map(x: Tensor, op: str) -> None:
    if x.ndim != 4:
        raise DimensionError(f"{op} expects a (B, H, W, C) map, got shape {x.shape}")


def window_partition(x: Tensor, window_size: int) -> Tensor:
    """
    Split a (B, H, W, C) map into non-overlapping w x w windows.

    :return: Tensor of shape (B * nW, w * w, C).
    """
    _check_map(x, "window_partition")
    b, h, w_, c = x.shape
    if h % window_size or w_ % window_size:
        raise ConfigError(f"Map {h}x{w_} is not divisible by window size {window_size}")
    rows, cols = h // window_size, w_ // window_size
    x = ops.reshape(x, (b, rows, window_size, cols, window_size, c))
    x = ops.permute(x, (0, 1, 3, 2, 4, 5))
    return ops.reshape(x, (b * rows * cols, window_size * window_size, c))


def window_reverse(windows: Tensor, height: int, width: int, window_size: int) -> Tensor:
    """
    Exact inverse of window_partition.

    :return: Tensor of shape (B, H, W, C).
    """
    if windows.ndim != 3 or windows.shape[1] != window_size * window_size:
        raise DimensionError(
            f"window_reverse expects (nW, {window_size * window_size}, C), got {windows.shape}"
        )
    if height % window_size or width % window_size:
        raise ConfigError(f"Map {height}x{width} is not divisible by window size {window_size}")
    rows, cols = height // window_size, width // window_size
    per_image = rows * cols
    if windows.shape[0] % per_image:
        raise DimensionError(
            f"window_reverse: {windows.shape[0]} windows do not tile a {height}x{width} map "
            f"({per_image} per image)"
        )
    b, c = windows.shape[0] // per_image, windows.shape[2]
    x = ops.reshape(windows, (b, rows, cols, window_size, window_size, c))
    x = ops.permute(x, (0, 1, 3, 2, 4, 5))
    return ops.reshape(x, (b, height, width, c))


def cyclic_shift(x: Tensor, dy: int, dx: int) -> Tensor:
    """
    Toroidal roll of a (B, H, W, C) map: element (i, j) moves to (i + dy, j + dx).
    """
    _check_map(x, "cyclic_shift")
    if dy == 0 and dx == 0:
        return x
    return ops.roll(x, (dy, dx), (1, 2))


def region_labels(height: int, width: int, window_size: int, shift: int) -> np.ndarray:
    """
    Label each position of the rolled map with the pre-shift region it came from.

    After rolling content up-left by ``shift``, the last window row and column
    hold positions that wrapped around; the three bands per axis are
    [0, H - w), [H - w, H - shift) and [H - shift, H).
    """
    labels = np.zeros((height, width), dtype=np.int64)
    bands_y = (slice(0, height - window_size), slice(height - window_size, height - shift), slice(height - shift, height))
    bands_x = (slice(0, width - window_size), slice(width - window_size, width - shift), slice(width - shift, width))
    region = 0
    for band_y in bands_y:
        for band_x in bands_x:
            labels[band_y, band_x] = region
            region += 1
    return labels


def shifted_attention_mask(height: int, width: int, window_size: int, shift: int) -> Tensor:
    """
    Additive attention mask for shifted windows.

    :return: Constant tensor (nW, w*w, w*w): 0 where two tokens of a window come
             from the same pre-shift region, MASK_VALUE otherwise.
    """
    if height % window_size or width % window_size:
        raise ConfigError(f"Map {height}x{width} is not divisible by window size {window_size}")
    if shift < 0 or shift >= window_size:
        raise ConfigError(f"Shift {shift} must satisfy 0 <= shift < window size {window_size}")
    n_windows = (height // window_size) * (width // window_size)
    tokens = window_size * window_size
    if shift == 0:
        return Tensor(np.zeros((n_windows, tokens, tokens)))
    labels = region_labels(height, width, window_size, shift)
    rows, cols = height // window_size, width // window_size
    windows = labels.reshape(rows, window_size, cols, window_size).transpose(0, 2, 1, 3)
    windows = windows.reshape(n_windows, tokens)
    same = windows[:, :, None] == windows[:, None, :]
    return Tensor(np.where(same, 0.0, MASK_VALUE))


def relative_position_index(window_size: int) -> np.ndarray:
    """
    Index into a ((2w-1)^2)-row bias table for every token pair of a window.

    :return: Integer array (w*w, w*w).
    """
    coords = np.stack(np.meshgrid(np.arange(window_size), np.arange(window_size), indexing="ij"))
    coords = coords.reshape(2, -1)
    relative = coords[:, :, None] - coords[:, None, :]
    relative = relative.transpose(1, 2, 0) + (window_size - 1)
    return relative[:, :, 0] * (2 * window_size - 1) + relative[:, :, 1]
