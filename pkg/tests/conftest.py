import numpy as np
import pytest
from hypothesis import settings, HealthCheck

settings.register_profile(
    "camfp",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("camfp")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def smooth_image(rng):
    """Natural-statistics test image: smooth luma, correlated channels."""
    from scipy.ndimage import gaussian_filter
    from camfp.imgcore import Image

    base = gaussian_filter(rng.random((96, 128)), 3)
    tint = gaussian_filter(rng.random((96, 128, 3)), (12, 12, 0)) * 0.25
    arr = np.clip(base[:, :, None] * 0.7 + tint + 0.05, 0, 1)
    return Image(arr)
