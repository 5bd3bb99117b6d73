"""
KCKP checkpoint files for swinalign.

Layout (little-endian):
    magic "KCKP" | version u32 | count u32 |
    count x (name length u16 | UTF-8 name | KTEN record)

Entries are written in the model's parameter order.
"""

import logging
import struct
from collections import OrderedDict
from typing import Mapping

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
from swinalign.utils.constants import FORMAT_VERSION, Magic
from swinalign.utils.errors import FormatError

logger = logging.getLogger(__name__)

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def encode_checkpoint(state: Mapping[str, np.ndarray]) -> bytes:
    parts = [Magic.CHECKPOINT, _U32.pack(FORMAT_VERSION), _U32.pack(len(state))]
    for name, value in state.items():
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FormatError(f"Parameter name '{name[:40]}...' is too long for a checkpoint")
        parts.append(_U16.pack(len(encoded)))
        parts.append(encoded)
        parts.append(encode_tensor(value))
    return b"".join(parts)


def decode_checkpoint(buffer: bytes) -> "OrderedDict[str, np.ndarray]":
    offset = check_magic(buffer, 0, Magic.CHECKPOINT)
    offset = check_version(buffer, offset, "KCKP")
    count, offset = read_u32(buffer, offset, "KCKP entry count")
    state: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for index in range(count):
        if offset + 2 > len(buffer):
            raise FormatError(f"Truncated name length of entry {index}", offset)
        length = _U16.unpack_from(buffer, offset)[0]
        offset += 2
        if offset + length > len(buffer):
            raise FormatError(f"Truncated name of entry {index}", offset)
        try:
            name = bytes(buffer[offset:offset + length]).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"Name of entry {index} is not valid UTF-8", offset)
        if name in state:
            raise FormatError(f"Duplicate entry '{name}'", offset)
        offset += length
        state[name], offset = decode_tensor(buffer, offset)
    if offset != len(buffer):
        raise FormatError(f"{len(buffer) - offset} trailing bytes after the last entry", offset)
    return state


def save_checkpoint(path: PathLike, state: Mapping[str, np.ndarray]) -> None:
    """
    :param path: Destination file.
    :param state: Parameter name to value, typically ``model.state_dict()``.
    """
    write_bytes(path, encode_checkpoint(state))
    logger.debug("Wrote checkpoint with %d entries to %s", len(state), path)


def load_checkpoint(path: PathLike) -> "OrderedDict[str, np.ndarray]":
    with open(path, "rb") as f:
        return decode_checkpoint(f.read())
