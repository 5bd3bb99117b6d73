import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swinalign.autodiff.tensor import Tensor
from swinalign.backbone.attention import WindowAttention
from swinalign.backbone.windows import (
    MASK_VALUE,
    cyclic_shift,
    relative_position_index,
    shifted_attention_mask,
    window_partition,
    window_reverse,
)
from swinalign.utils.errors import ConfigError, DimensionError


def test_partition_shapes():
    assert window_partition(Tensor(np.zeros((1, 8, 8, 5))), 2).shape == (16, 4, 5)
    assert window_partition(Tensor(np.zeros((3, 2, 2, 5))), 2).shape == (3, 4, 5)


def test_partition_keeps_windows_row_major():
    x = np.arange(16.0).reshape(1, 4, 4, 1)
    windows = window_partition(Tensor(x), 2).data[..., 0]
    assert_array_equal(windows[0], [0, 1, 4, 5])
    assert_array_equal(windows[1], [2, 3, 6, 7])
    assert_array_equal(windows[3], [10, 11, 14, 15])


def test_partition_rejects_indivisible_map():
    with pytest.raises(ConfigError):
        window_partition(Tensor(np.zeros((1, 6, 6, 1))), 4)


def test_reverse_rejects_wrong_window_count():
    with pytest.raises(DimensionError):
        window_reverse(Tensor(np.zeros((3, 4, 2))), 4, 4, 2)


def test_partition_reverse_round_trip_is_bitwise(rng):
    for _ in range(100):
        b = int(rng.integers(1, 3))
        w = int(rng.choice([1, 2, 4]))
        side = w * int(rng.integers(1, 4))
        x = rng.normal(size=(b, side, side, int(rng.integers(1, 5))))
        back = window_reverse(window_partition(Tensor(x), w), side, side, w)
        assert_array_equal(back.data, x)


def test_cyclic_shift_moves_origin_to_corner():
    x = np.zeros((1, 4, 4, 1))
    x[0, 0, 0, 0] = 1.0
    shifted = cyclic_shift(Tensor(x), -1, -1).data
    assert shifted[0, 3, 3, 0] == 1.0
    assert shifted.sum() == 1.0


def test_cyclic_shift_round_trip_is_bitwise(rng):
    x = Tensor(rng.normal(size=(2, 6, 6, 3)))
    assert cyclic_shift(x, 0, 0) is x
    for _ in range(100):
        dy, dx = (int(v) for v in rng.integers(-5, 6, size=2))
        back = cyclic_shift(cyclic_shift(x, dy, dx), -dy, -dx)
        assert_array_equal(back.data, x.data)


def test_unshifted_mask_is_zero():
    mask = shifted_attention_mask(4, 4, 2, 0)
    assert mask.shape == (4, 4, 4)
    assert not mask.data.any()


def test_corner_window_mask_keeps_only_the_diagonal():
    mask = shifted_attention_mask(4, 4, 2, 1).data
    corner = mask[-1]
    assert np.count_nonzero(corner == 0.0) == 4
    assert_array_equal(np.diag(corner), np.zeros(4))
    assert np.all(corner[~np.eye(4, dtype=bool)] == MASK_VALUE)
    # The top-left window never wraps.
    assert not mask[0].any()


def test_mask_rejects_shift_at_least_window():
    with pytest.raises(ConfigError):
        shifted_attention_mask(4, 4, 2, 2)


def test_relative_position_index_covers_table():
    index = relative_position_index(2)
    assert index.shape == (4, 4)
    assert set(np.unique(index)) <= set(range(9))
    assert np.all(np.diag(index) == 4)
    assert_array_equal(index, 8 - index.T)


def _identity_attention(dim, window_size, rng):
    attn = WindowAttention(dim, window_size, 1, rng)
    weight = np.zeros((dim, 3 * dim))
    weight[:, 2 * dim:] = np.eye(dim)
    attn.qkv.weight.data = weight
    attn.proj.weight.data = np.eye(dim)
    return attn


def test_uniform_attention_averages_values(rng):
    attn = _identity_attention(4, 2, rng)
    windows = rng.normal(size=(3, 4, 4))
    out = attn(Tensor(windows)).data
    expected = np.repeat(windows.mean(axis=1, keepdims=True), 4, axis=1)
    assert_allclose(out, expected, atol=1e-12)


def test_single_token_window_passes_values_through(rng):
    attn = _identity_attention(4, 1, rng)
    windows = rng.normal(size=(5, 1, 4))
    assert_allclose(attn(Tensor(windows)).data, windows, atol=1e-12)


def test_attention_rows_sum_to_one_under_mask(rng):
    attn = WindowAttention(4, 2, 2, rng)
    attn.relative_position_bias_table.data = rng.normal(size=attn.relative_position_bias_table.shape)
    x = rng.normal(size=(2, 4, 4, 4))
    attn(window_partition(Tensor(x), 2), shifted_attention_mask(4, 4, 2, 1))
    assert_allclose(attn.last_attention.sum(axis=-1), 1.0, atol=1e-12)


def test_attention_is_window_local(rng):
    attn = WindowAttention(4, 2, 2, rng)
    windows = rng.normal(size=(4, 4, 4))
    before = attn(Tensor(windows)).data
    perturbed = windows.copy()
    perturbed[0, 1] += 1.0
    after = attn(Tensor(perturbed)).data
    assert_array_equal(after[1:], before[1:])
    assert not np.array_equal(after[0], before[0])


def test_attention_rejects_indivisible_heads(rng):
    with pytest.raises(ConfigError):
        WindowAttention(6, 2, 4, rng)
