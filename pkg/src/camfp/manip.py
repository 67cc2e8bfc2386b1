"""Robustness manipulations applied to test images before down-sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import Image, jpeg_roundtrip


@dataclass(frozen=True)
class ManipSpec:
    """Exactly one of gamma / angle / quality, selected by op."""

    op: str  # gamma | rotate | jpeg
    gamma: float | None = None
    angle: float | None = None
    quality: int | None = None

    def __post_init__(self):
        params = {"gamma": self.gamma, "rotate": self.angle, "jpeg": self.quality}
        if self.op not in params:
            raise ValueError(f"unknown manipulation {self.op!r}; choose gamma, rotate or jpeg")
        if params[self.op] is None:
            raise ValueError(f"manipulation {self.op!r} needs its parameter set")
        set_count = sum(v is not None for v in (self.gamma, self.angle, self.quality))
        if set_count != 1:
            raise ValueError("exactly one manipulation parameter may be set")
        if self.op == "gamma" and self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.op == "jpeg" and not 1 <= int(self.quality) <= 100:
            raise ValueError(f"JPEG quality must be in [1, 100], got {self.quality}")

    @property
    def param(self) -> float:
        return {"gamma": self.gamma, "rotate": self.angle, "jpeg": self.quality}[self.op]


def gamma_correct(img: Image, gamma: float) -> Image:
    """out = in^gamma per channel; strictly monotone for gamma > 0."""
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return Image(np.clip(img.data, 0.0, 1.0) ** gamma)


def rotate(img: Image, degrees: float) -> Image:
    """Rotation about the image center, bilinear, same-size canvas.

    Out-of-support samples replicate the nearest edge pixel; right angles on
    square images short-circuit to the exact pixel permutation (counter-
    clockwise for positive angles).
    """
    theta = degrees % 360.0
    if theta == 0.0:
        return Image(img.data.copy())
    if theta == 180.0:
        return Image(img.data[::-1, ::-1].copy())
    if theta in (90.0, 270.0) and img.height == img.width:
        k = 1 if theta == 90.0 else 3
        return Image(np.rot90(img.data, k=k, axes=(0, 1)).copy())

    h, w = img.height, img.width
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rad = np.deg2rad(theta)
    cos_t, sin_t = np.cos(rad), np.sin(rad)
    rows = np.arange(h)[:, None] - cy
    cols = np.arange(w)[None, :] - cx
    # Inverse map of a counter-clockwise rotation (matches rot90 at 90 deg).
    src_r = sin_t * cols + cos_t * rows + cy
    src_c = cos_t * cols - sin_t * rows + cx
    src_r = np.clip(src_r, 0.0, h - 1.0)
    src_c = np.clip(src_c, 0.0, w - 1.0)
    r0 = np.floor(src_r).astype(np.intp)
    c0 = np.floor(src_c).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (src_r - r0)[:, :, None]
    fc = (src_c - c0)[:, :, None]
    d = img.data
    top = d[r0, c0] * (1 - fc) + d[r0, c1] * fc
    bot = d[r1, c0] * (1 - fc) + d[r1, c1] * fc
    return Image(np.clip(top * (1 - fr) + bot * fr, 0.0, 1.0))


def apply(img: Image, spec: ManipSpec) -> Image:
    """Dispatch to the matching manipulation (always before down-sampling)."""
    if spec.op == "gamma":
        return gamma_correct(img, spec.gamma)
    if spec.op == "rotate":
        return rotate(img, spec.angle)
    return jpeg_roundtrip(img, int(spec.quality))
