import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st
import hypothesis.extra.numpy as hnp

from camfp import cftensor
from camfp.errors import DecodeError


def test_header_layout():
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    blob = cftensor.tensor_bytes(arr)
    assert blob[:4] == b"CFTR"
    assert blob[4] == 1  # version
    assert blob[5] == 1  # float32
    assert blob[6] == 2  # ndim
    assert blob[7:11] == b"\x00\x00\x00\x00"
    dims = np.frombuffer(blob, dtype="<i8", count=2, offset=11)
    assert list(dims) == [2, 3]


def test_roundtrip_file(tmp_path):
    arr = np.random.default_rng(0).standard_normal((4, 5, 3))
    path = tmp_path / "t.cft"
    cftensor.write_tensor(path, arr)
    back = cftensor.read_tensor(path)
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back, arr)


@given(
    hnp.arrays(
        dtype=st.sampled_from([np.float32, np.float64]),
        shape=hnp.array_shapes(min_dims=1, max_dims=4, min_side=1, max_side=6),
        elements=st.floats(-1e6, 1e6, width=32),
    )
)
def test_roundtrip_property(arr):
    back = cftensor.tensor_from_bytes(cftensor.tensor_bytes(arr))
    assert back.shape == arr.shape
    assert back.dtype == arr.dtype
    np.testing.assert_array_equal(back, arr)


def test_rejects_bad_magic():
    with pytest.raises(DecodeError):
        cftensor.tensor_from_bytes(b"NOPE" + b"\x00" * 32)


def test_rejects_truncated():
    blob = cftensor.tensor_bytes(np.ones(4, dtype=np.float64))
    with pytest.raises(DecodeError):
        cftensor.tensor_from_bytes(blob[:-3])


def test_rejects_integer_dtype():
    with pytest.raises(ValueError):
        cftensor.tensor_bytes(np.arange(3))
