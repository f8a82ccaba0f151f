"""TNSR tensor container.

Layout (all integers little-endian)::

    offset  size      field
    0       4         magic b"TNSR"
    4       2         version (uint16), currently 1
    6       1         dtype code (uint8): 1 float64, 2 float32, 3 uint16
    7       1         rank (uint8), at most 4
    8       4*rank    dims (uint32 each)
    ...               payload, row-major, little-endian elements

A 1-D float64 tensor [1.0, 2.0] is therefore 28 bytes.
"""

import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.utils.helpers import (
    BadMagic,
    IoFailure,
    TensorFormatError,
    TensorLengthMismatch,
    UnsupportedDtype,
    VersionUnsupported,
)

MAGIC = b"TNSR"
VERSION = 1
MAX_RANK = 4
MAX_ELEMENTS = 2 ** 31

DTYPES = {
    1: np.dtype("<f8"),
    2: np.dtype("<f4"),
    3: np.dtype("<u2"),
}
DTYPE_CODES = {dtype: code for code, dtype in DTYPES.items()}

_HEADER = struct.Struct("<4sHBB")

PathLike = Union[str, os.PathLike]


def encode_tensor(tensor) -> bytes:
    array = np.asarray(tensor)
    dtype = array.dtype.newbyteorder("<") if array.dtype.byteorder != "|" else array.dtype
    code = DTYPE_CODES.get(dtype)
    if code is None:
        raise UnsupportedDtype(f"dtype {array.dtype} cannot be stored", {"field": "dtype"})
    if array.ndim > MAX_RANK:
        raise TensorFormatError(f"rank {array.ndim} exceeds {MAX_RANK}", {"field": "rank"})
    if any(dim >= 2 ** 32 for dim in array.shape):
        raise TensorFormatError("dimension does not fit 32 bits", {"field": "dims"})
    header = _HEADER.pack(MAGIC, VERSION, code, array.ndim)
    dims = struct.pack(f"<{array.ndim}I", *array.shape)
    payload = np.ascontiguousarray(array, dtype=DTYPES[code]).tobytes(order="C")
    return header + dims + payload


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise TensorLengthMismatch(f"{len(data)} bytes is shorter than the header",
                                   {"field": "header"})
    magic, version, code, rank = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}", {"field": "magic"})
    if version != VERSION:
        raise VersionUnsupported(f"version {version} is not supported", {"field": "version"})
    if code not in DTYPES:
        raise UnsupportedDtype(f"unknown dtype code {code}", {"field": "dtype"})
    if rank > MAX_RANK:
        raise TensorFormatError(f"rank {rank} exceeds {MAX_RANK}", {"field": "rank"})
    dims_end = _HEADER.size + 4 * rank
    if len(data) < dims_end:
        raise TensorLengthMismatch("file ends inside the dims", {"field": "dims"})
    dims = struct.unpack_from(f"<{rank}I", data, _HEADER.size)
    count = 1
    for dim in dims:
        count *= dim
    if count > MAX_ELEMENTS:
        raise TensorFormatError(f"{count} elements exceeds the {MAX_ELEMENTS} cap", {"field": "dims"})
    dtype = DTYPES[code]
    expected = count * dtype.itemsize
    actual = len(data) - dims_end
    if actual != expected:
        raise TensorLengthMismatch(f"payload is {actual} bytes, dims need {expected}",
                                   {"field": "payload"})
    if count == 0:
        return np.zeros(dims, dtype=dtype)
    return np.frombuffer(data, dtype=dtype, count=count, offset=dims_end).reshape(dims).copy()


def write_tensor(path: PathLike, tensor) -> None:
    data = encode_tensor(tensor)
    try:
        with open(path, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
    except OSError as e:
        raise IoFailure(f"cannot write tensor: {e}", {"path": str(path)})


def read_tensor(path: PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read tensor: {e}", {"path": str(path)})
    try:
        return decode_tensor(data)
    except TensorFormatError as e:
        e.details.setdefault("path", str(path))
        raise
