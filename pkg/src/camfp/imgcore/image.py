"""Image carrier type, lossless I/O, color conversion and bilinear resampling.

Images live as (H, W, C) float64 arrays in [0, 1]; 8-bit quantization only
happens at file boundaries and inside the JPEG codec, because residual
extraction downstream is precision-sensitive.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import DecodeError, ShapeError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # BT.601


@dataclass(frozen=True)
class Image:
    """(H, W, C) float raster, C in {1, 3}, values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ShapeError(f"image data must be (H, W, 1|3), got {np.asarray(self.data).shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"empty image {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _from_u8(arr: np.ndarray) -> Image:
    return Image(arr.astype(np.float64) / 255.0)


def to_u8(img: Image) -> np.ndarray:
    """Quantize to 8-bit storage: round(v*255) clamped to [0, 255]."""
    return np.clip(np.round(img.data * 255.0), 0, 255).astype(np.uint8)


def _read_ppm(data: bytes) -> Image:
    if not data.startswith(b"P6"):
        raise DecodeError("PPM: only binary P6 is supported")
    # Header tokens may be separated by whitespace and '#' comments.
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise DecodeError(f"PPM: unsupported maxval {maxval}, only 8-bit supported")
    pos += 1  # single whitespace after maxval
    n = width * height * 3
    raster = np.frombuffer(data, dtype=np.uint8, count=n, offset=pos)
    if raster.size != n:
        raise DecodeError("PPM: truncated raster")
    return _from_u8(raster.reshape(height, width, 3))


def _write_ppm(img: Image, path) -> None:
    u8 = to_u8(img)
    if img.channels == 1:
        u8 = np.repeat(u8, 3, axis=2)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.width} {img.height}\n255\n".encode())
        fh.write(u8.tobytes())


def load_image(path) -> Image:
    """Load a PNG, PPM(P6) or baseline JPEG file, scaled by 1/255."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head.startswith(b"P6"):
        with open(path, "rb") as fh:
            return _read_ppm(fh.read())
    if head.startswith(b"\xff\xd8"):
        from .jpeg import decode_jpeg

        with open(path, "rb") as fh:
            return decode_jpeg(fh.read())
    if head.startswith(b"\x89PNG"):
        from PIL import Image as PilImage

        with PilImage.open(path) as pil:
            if pil.mode not in ("L", "RGB"):
                raise DecodeError(f"PNG: unsupported mode {pil.mode!r} (8-bit L or RGB only)")
            return _from_u8(np.asarray(pil))
    raise DecodeError(f"unsupported image format in {path} (PNG, PPM(P6) or baseline JPEG)")


def save_image(img: Image, path) -> None:
    """Write PPM(P6) or PNG by extension, quantizing with round(v*255)."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".ppm":
        _write_ppm(img, path)
    elif ext == ".png":
        from PIL import Image as PilImage

        u8 = to_u8(img)
        if img.channels == 1:
            u8 = u8[:, :, 0]
        try:
            PilImage.fromarray(u8).save(path, format="PNG")
        except OSError as exc:
            raise OSError(f"failed to write {path}: {exc}") from exc
    else:
        raise ValueError(f"unsupported save extension {ext!r} for {path} (use .ppm or .png)")


def to_luminance(img: Image) -> Image:
    """BT.601 luma: y = 0.299 R + 0.587 G + 0.114 B."""
    if img.channels != 3:
        raise ShapeError(f"to_luminance needs 3 channels, got {img.channels}")
    y = img.data @ np.asarray(LUMA_WEIGHTS)
    return Image(y[:, :, None])


def _axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel-center alignment: s = (d + 0.5) * (in/out) - 0.5, edge-clamped.
    s = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    s = np.clip(s, 0.0, n_in - 1.0)
    lo = np.floor(s).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = s - lo
    return lo, hi, frac


def resize_bilinear(img: Image, out_h: int, out_w: int) -> Image:
    """Bilinear resample with half-pixel centers and edge clamping."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be >= 1, got {out_h}x{out_w}")
    src = img.data
    r0, r1, fr = _axis_coords(img.height, out_h)
    c0, c1, fc = _axis_coords(img.width, out_w)
    fr = fr[:, None, None]
    fc = fc[None, :, None]
    top = src[r0][:, c0] * (1.0 - fc) + src[r0][:, c1] * fc
    bot = src[r1][:, c0] * (1.0 - fc) + src[r1][:, c1] * fc
    return Image(top * (1.0 - fr) + bot * fr)
