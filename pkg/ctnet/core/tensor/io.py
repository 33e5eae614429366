"""
Tensor file format.

    magic "CTN1" | dtype u8 (0 float32, 1 float64) | ndim u8 |
    ndim x u64 little-endian dims | little-endian row-major payload
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from ctnet.error_handling import TensorFormatError

logger = logging.getLogger(__name__)

MAGIC = b"CTN1"
_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_FOR = {"float32": 0, "float64": 1}

PathLike = Union[str, Path]


def encode_tensor(arr: np.ndarray, dtype: str = "float64") -> bytes:
    """Serialize an array; the axis count is whatever arr.ndim is (5 for Tensor5)."""
    if dtype not in _CODE_FOR:
        raise TensorFormatError(f"Unsupported storage dtype {dtype!r}")
    code = _CODE_FOR[dtype]
    if arr.ndim > 255:
        raise TensorFormatError(f"Too many axes: {arr.ndim}")
    header = MAGIC + bytes([code, arr.ndim]) + np.asarray(arr.shape, dtype="<u8").tobytes()
    payload = np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code]).tobytes()
    return header + payload


def decode_tensor(blob: bytes) -> np.ndarray:
    """Parse bytes produced by encode_tensor; payload is widened to float64."""
    if len(blob) < 6 or blob[:4] != MAGIC:
        raise TensorFormatError("Missing CTN1 magic bytes")
    code, ndim = blob[4], blob[5]
    if code not in _DTYPE_CODES:
        raise TensorFormatError(f"Unknown dtype code {code}")
    dims_end = 6 + 8 * ndim
    if len(blob) < dims_end:
        raise TensorFormatError("Truncated dims header")
    shape = tuple(int(d) for d in np.frombuffer(blob[6:dims_end], dtype="<u8"))
    dt = _DTYPE_CODES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
    payload = blob[dims_end:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"Payload has {len(payload)} bytes, dims {shape} need {expected}"
        )
    return np.frombuffer(payload, dtype=dt).reshape(shape).astype(np.float64)


def save_tensor(path: PathLike, arr: np.ndarray, dtype: str = "float64") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensor(arr, dtype))
    logger.debug(f"Saved tensor {arr.shape} to {path}")
    return path


def load_tensor(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise TensorFormatError(f"Tensor file not found: {path}")
    return decode_tensor(path.read_bytes())
