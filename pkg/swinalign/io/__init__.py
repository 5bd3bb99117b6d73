"""
Binary file formats: KTEN tensors and KCKP checkpoints.
"""

from swinalign.io.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from swinalign.io.kten import decode_tensor, encode_tensor, load_tensor, save_tensor

__all__ = [
    "decode_checkpoint",
    "decode_tensor",
    "encode_checkpoint",
    "encode_tensor",
    "load_checkpoint",
    "load_tensor",
    "save_checkpoint",
    "save_tensor",
]
