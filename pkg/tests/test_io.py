import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from swinalign.io import (
    decode_checkpoint,
    decode_tensor,
    encode_checkpoint,
    encode_tensor,
    load_checkpoint,
    load_tensor,
    save_checkpoint,
    save_tensor,
)
from swinalign.model import SwinAlignModel
from swinalign.utils.errors import ConfigError, FormatError, UnsupportedVersionError

from conftest import micro_model_config


def test_tensor_layout():
    payload = encode_tensor(np.array([[1.0, 2.0, 3.0]]))
    assert payload[:4] == b"KTEN"
    assert struct.unpack_from("<III", payload, 4) == (1, 2, 1)
    assert struct.unpack_from("<I", payload, 16)[0] == 3
    assert struct.unpack_from("<3d", payload, 20) == (1.0, 2.0, 3.0)
    assert len(payload) == 20 + 24


def test_tensor_round_trip(tmp_path, rng):
    for i in range(100):
        shape = tuple(int(d) for d in rng.integers(1, 4, size=int(rng.integers(0, 4))))
        array = np.asarray(rng.normal(size=shape))
        path = tmp_path / f"t{i}.kten"
        save_tensor(path, array)
        loaded = load_tensor(path)
        assert loaded.shape == shape
        assert_array_equal(loaded, array)


def test_embedded_tensor_returns_end_offset():
    payload = b"xx" + encode_tensor(np.ones(2)) + b"tail"
    array, end = decode_tensor(payload, 2)
    assert_array_equal(array, [1.0, 1.0])
    assert payload[end:] == b"tail"


def test_tensor_format_errors(tmp_path):
    payload = encode_tensor(np.ones((2, 2)))
    with pytest.raises(FormatError, match="offset 0"):
        decode_tensor(b"NOPE" + payload[4:])
    with pytest.raises(FormatError):
        decode_tensor(payload[:-1])
    with pytest.raises(UnsupportedVersionError):
        decode_tensor(payload[:4] + struct.pack("<I", 9) + payload[8:])
    path = tmp_path / "trailing.kten"
    path.write_bytes(payload + b"\0")
    with pytest.raises(FormatError, match="trailing"):
        load_tensor(path)


def test_checkpoint_round_trip_restores_model(tmp_path):
    source = SwinAlignModel(micro_model_config(), seed=0)
    path = tmp_path / "model.kckp"
    save_checkpoint(path, source.state_dict())
    state = load_checkpoint(path)
    assert list(state) == [name for name, _ in source.named_parameters()]
    target = SwinAlignModel(micro_model_config(), seed=9)
    target.load_state_dict(state)
    for (name, a), (_, b) in zip(source.named_parameters(), target.named_parameters()):
        assert_array_equal(a.data, b.data, err_msg=name)


def test_checkpoint_random_round_trips(rng):
    for _ in range(100):
        state = {
            f"p{i}.weight": rng.normal(size=tuple(int(d) for d in rng.integers(1, 4, size=2)))
            for i in range(int(rng.integers(0, 4)))
        }
        decoded = decode_checkpoint(encode_checkpoint(state))
        assert list(decoded) == list(state)
        for name in state:
            assert_array_equal(decoded[name], state[name])


def test_checkpoint_format_errors():
    payload = encode_checkpoint({"a": np.ones(2), "b": np.zeros(1)})
    with pytest.raises(FormatError):
        decode_checkpoint(payload[:-3])
    with pytest.raises(FormatError, match="trailing"):
        decode_checkpoint(payload + b"\0")
    with pytest.raises(UnsupportedVersionError):
        decode_checkpoint(payload[:4] + struct.pack("<I", 2) + payload[8:])
    duplicated = payload[:8] + struct.pack("<I", 3) + payload[12:] + payload[12:12 + 2 + 1 + 32]
    with pytest.raises(FormatError, match="Duplicate"):
        decode_checkpoint(duplicated)


def test_state_mismatch_is_rejected():
    model = SwinAlignModel(micro_model_config(), seed=0)
    state = model.state_dict()
    state.pop(next(iter(state)))
    with pytest.raises(ConfigError):
        model.load_state_dict(state)
    other = SwinAlignModel(micro_model_config("sphn"), seed=0)
    with pytest.raises(ConfigError):
        model.load_state_dict(other.state_dict())
