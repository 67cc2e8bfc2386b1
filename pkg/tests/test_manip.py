import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st
from scipy.ndimage import gaussian_filter

from camfp.imgcore import Image
from camfp.manip import ManipSpec, apply, gamma_correct, rotate


def test_gamma_identity(rng):
    img = Image(rng.random((16, 16, 3)))
    np.testing.assert_array_equal(gamma_correct(img, 1.0).data, img.data)


def test_gamma_closed_form():
    img = Image(np.full((2, 2, 3), 0.25))
    assert gamma_correct(img, 0.5).data[0, 0, 0] == pytest.approx(0.5)


def test_gamma_inverse_composition(rng):
    img = Image(rng.random((16, 16, 3)))
    back = gamma_correct(gamma_correct(img, 0.7), 1.0 / 0.7)
    np.testing.assert_allclose(back.data, img.data, atol=1e-6)


def test_gamma_rejects_nonpositive():
    with pytest.raises(ValueError):
        gamma_correct(Image(np.zeros((2, 2, 3))), 0.0)


@given(st.floats(0.2, 5.0))
def test_gamma_monotone_and_in_range(g):
    vals = np.linspace(0.0, 1.0, 32)
    arr = np.broadcast_to(vals[:, None, None], (32, 2, 3)).copy()
    out = gamma_correct(Image(arr), g).data[:, 0, 0]
    assert np.all(np.diff(out) > 0)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_rotate_90_is_exact_permutation(rng):
    img = Image(rng.random((32, 32, 3)))
    out = rotate(img, 90.0)
    np.testing.assert_array_equal(out.data, np.rot90(img.data, 1, axes=(0, 1)))
    assert sorted(out.data.ravel()) == sorted(img.data.ravel())


def test_rotate_180_and_270(rng):
    img = Image(rng.random((16, 16, 3)))
    np.testing.assert_array_equal(rotate(img, 180.0).data, img.data[::-1, ::-1])
    np.testing.assert_array_equal(rotate(img, 270.0).data, np.rot90(img.data, 3, axes=(0, 1)))


def test_rotate_360_identity(rng):
    img = Image(rng.random((16, 16, 3)))
    np.testing.assert_allclose(rotate(img, 360.0).data, img.data, atol=1e-6)


def test_rotate_general_path_matches_permutation_at_right_angle(rng):
    img = Image(rng.random((24, 24, 3)))
    exact = rotate(img, 90.0)
    general = rotate(img, 90.0 + 1e-9)
    np.testing.assert_allclose(general.data[1:-1, 1:-1], exact.data[1:-1, 1:-1], atol=1e-5)


def test_rotate_composition_interior(rng):
    arr = np.clip(gaussian_filter(rng.random((96, 96, 3)), (2, 2, 0)) * 2.5 + 0.1, 0, 1)
    img = Image(arr)
    back = rotate(rotate(img, 15.0), -15.0)
    margin = 10  # ~10% per side
    inner = slice(margin, -margin)
    mae = np.abs(back.data[inner, inner] - img.data[inner, inner]).mean()
    assert mae < 0.02


def test_rotate_stays_in_range(rng):
    img = Image(rng.random((20, 30, 3)))
    out = rotate(img, 33.0)
    assert out.data.min() >= 0.0 and out.data.max() <= 1.0
    assert out.data.shape == img.data.shape


def test_apply_dispatch(rng):
    img = Image(rng.random((32, 32, 3)))
    np.testing.assert_array_equal(apply(img, ManipSpec("gamma", gamma=1.0)).data, img.data)
    np.testing.assert_array_equal(
        apply(img, ManipSpec("rotate", angle=90.0)).data, rotate(img, 90.0).data
    )
    jp = apply(img, ManipSpec("jpeg", quality=20))
    assert jp.data.shape == img.data.shape
    assert 0.0 <= jp.data.min() and jp.data.max() <= 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        ManipSpec("sharpen", gamma=1.0)
    with pytest.raises(ValueError):
        ManipSpec("gamma")
    with pytest.raises(ValueError):
        ManipSpec("gamma", gamma=1.0, angle=15.0)
    with pytest.raises(ValueError):
        ManipSpec("gamma", gamma=-1.0)
    with pytest.raises(ValueError):
        ManipSpec("jpeg", quality=0)
    assert ManipSpec("rotate", angle=15.0).param == 15.0
