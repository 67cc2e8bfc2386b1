"""Portable binary tensor files.

Every persisted array in the toolkit (fingerprints, patches, model
parameters, SVM blocks) uses the same container so files are bit-exact
across platforms:

    magic b"CFTR" | version u8 (=1) | dtype u8 (1=f32, 2=f64) | ndim u8 |
    4 reserved zero bytes | ndim little-endian i64 dims | row-major
    little-endian payload
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DecodeError

MAGIC = b"CFTR"
VERSION = 1

_DTYPE_BY_CODE = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODE_BY_KIND = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


def tensor_bytes(arr: np.ndarray) -> bytes:
    """Serialize a float32/float64 array to the container format."""
    arr = np.ascontiguousarray(arr)
    code = _CODE_BY_KIND.get(arr.dtype)
    if code is None:
        raise ValueError(f"unsupported dtype {arr.dtype}; use float32 or float64")
    header = MAGIC + struct.pack("<BBB4x", VERSION, code, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}q", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    return header + dims + payload


def write_tensor(path, arr: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(tensor_bytes(arr))


def tensor_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != MAGIC:
        raise DecodeError("not a CFTR tensor file (bad magic)")
    version, code, ndim = struct.unpack_from("<BBB", data, 4)
    if version != VERSION:
        raise DecodeError(f"unsupported CFTR version {version}")
    dtype = _DTYPE_BY_CODE.get(code)
    if dtype is None:
        raise DecodeError(f"unknown CFTR dtype code {code}")
    offset = 4 + 3 + 4
    dims = struct.unpack_from(f"<{ndim}q", data, offset)
    offset += 8 * ndim
    n = int(np.prod(dims)) if ndim else 1
    expected = offset + n * dtype.itemsize
    if len(data) != expected:
        raise DecodeError(f"CFTR payload length {len(data)} != expected {expected}")
    arr = np.frombuffer(data, dtype=dtype, count=n, offset=offset)
    return arr.reshape(dims).astype(dtype.newbyteorder("="), copy=True)


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return tensor_from_bytes(fh.read())
