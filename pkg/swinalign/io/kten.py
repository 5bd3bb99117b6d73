"""
KTEN binary tensor records for swinalign.

Layout (little-endian, no padding):
    magic "KTEN" | version u32 | rank u32 | rank x dim u32 | prod(dims) x f64

A record may be embedded in a larger file; ``decode_tensor`` therefore takes
and returns a byte offset. Reading a standalone file additionally rejects
trailing bytes.
"""

import os
import struct
from typing import Tuple, Union

import numpy as np

from swinalign.utils.constants import FORMAT_VERSION, Magic
from swinalign.utils.errors import FormatError, UnsupportedVersionError

PathLike = Union[str, os.PathLike]

_U32 = struct.Struct("<I")


def read_u32(buffer: bytes, offset: int, what: str) -> Tuple[int, int]:
    """Read one little-endian u32; FormatError names ``what`` on truncation."""
    if offset + 4 > len(buffer):
        raise FormatError(f"Truncated {what}", offset)
    return _U32.unpack_from(buffer, offset)[0], offset + 4


def check_magic(buffer: bytes, offset: int, magic: bytes) -> int:
    end = offset + len(magic)
    if end > len(buffer):
        raise FormatError(f"Truncated magic, expected {magic!r}", offset)
    found = bytes(buffer[offset:end])
    if found != magic:
        raise FormatError(f"Bad magic {found!r}, expected {magic!r}", offset)
    return end


def check_version(buffer: bytes, offset: int, kind: str) -> int:
    version, next_offset = read_u32(buffer, offset, f"{kind} version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{kind} format version {version} is not supported (expected {FORMAT_VERSION})", offset
        )
    return next_offset


def encode_tensor(array) -> bytes:
    """
    Serialize an array as one KTEN record.

    :param array: Any array convertible to float64; a 0-d array has rank 0.
    """
    array = np.array(array, dtype="<f8", order="C")
    header = [Magic.TENSOR, _U32.pack(FORMAT_VERSION), _U32.pack(array.ndim)]
    header.extend(_U32.pack(d) for d in array.shape)
    return b"".join(header) + array.tobytes(order="C")


def decode_tensor(buffer: bytes, offset: int = 0) -> Tuple[np.ndarray, int]:
    """
    Parse one KTEN record starting at ``offset``.

    :return: (array, offset just past the record).
    """
    offset = check_magic(buffer, offset, Magic.TENSOR)
    offset = check_version(buffer, offset, "KTEN")
    rank, offset = read_u32(buffer, offset, "KTEN rank")
    dims = []
    for axis in range(rank):
        dim, offset = read_u32(buffer, offset, f"KTEN dim {axis}")
        dims.append(dim)
    count = int(np.prod(dims)) if dims else 1
    end = offset + 8 * count
    if end > len(buffer):
        raise FormatError(f"Truncated KTEN payload: need {8 * count} bytes, have {len(buffer) - offset}", offset)
    if count == 0:
        return np.zeros(dims), end
    array = np.frombuffer(buffer, dtype="<f8", count=count, offset=offset).astype(np.float64)
    return array.reshape(dims), end


def write_bytes(path: PathLike, payload: bytes) -> None:
    """Write through a sibling temp file so readers never see a partial file."""
    path = os.fspath(path)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    tmp_path = path + ".tmp"
    with open(tmp_path, "wb") as f:
        f.write(payload)
    os.replace(tmp_path, path)


def save_tensor(path: PathLike, array) -> None:
    write_bytes(path, encode_tensor(array))


def load_tensor(path: PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        buffer = f.read()
    array, end = decode_tensor(buffer)
    if end != len(buffer):
        raise FormatError(f"{len(buffer) - end} trailing bytes after KTEN record", end)
    return array
