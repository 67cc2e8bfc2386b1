"""Noise-residual extraction, reference fingerprints, NCC and PCE.

The matching pipeline follows the classical sensor-fingerprint protocol:
per-image wavelet Wiener residuals, averaged per device into a reference,
compared by peak-to-correlation energy over all cyclic shifts with a fixed
detection threshold of 50.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from numpy.fft import fft2, ifft2

from . import cftensor
from .errors import ShapeError
from .imgcore import Image, resize_bilinear
from .imgcore.image import LUMA_WEIGHTS
from .wavelet import DenoiseParams, wiener_residual

PCE_THRESHOLD = 50.0


@dataclass(frozen=True)
class NoiseResidual:
    """Luminance-combined, zero-meaned residual of one image."""

    plane: np.ndarray
    image_id: str = ""

    @property
    def height(self) -> int:
        return self.plane.shape[0]

    @property
    def width(self) -> int:
        return self.plane.shape[1]


@dataclass(frozen=True)
class ReferenceFingerprint:
    device_id: str
    plane: np.ndarray
    n_images: int
    kind: str = "natural"  # natural | flat

    def __post_init__(self):
        if self.n_images < 1:
            raise ValueError(f"n_images must be >= 1, got {self.n_images}")
        if self.kind not in ("natural", "flat"):
            raise ValueError(f"kind must be 'natural' or 'flat', got {self.kind!r}")


@dataclass(frozen=True)
class PceReport:
    pce: float
    peak_location: tuple[int, int]
    decision: str  # matched | unmatched
    threshold: float = PCE_THRESHOLD

    @property
    def matched(self) -> bool:
        return self.decision == "matched"


def _zero_mean(plane: np.ndarray) -> np.ndarray:
    """Global, then row-wise, then column-wise mean removal."""
    out = plane - plane.mean()
    out -= out.mean(axis=1, keepdims=True)
    out -= out.mean(axis=0, keepdims=True)
    return out


def extract_residual(img: Image, params: DenoiseParams = DenoiseParams(), image_id: str = "") -> NoiseResidual:
    """Wavelet Wiener noise residual, luma-combined and zero-meaned."""
    min_side = 1 << params.levels
    if img.height < min_side or img.width < min_side:
        raise ShapeError(
            f"image {img.height}x{img.width} smaller than 2^levels={min_side} for residual extraction"
        )
    residuals = [
        wiener_residual(img.data[:, :, c] * 255.0, params) for c in range(img.channels)
    ]
    if img.channels == 3:
        plane = sum(w * r for w, r in zip(LUMA_WEIGHTS, residuals))
    else:
        plane = residuals[0]
    return NoiseResidual(_zero_mean(plane), image_id)


def build_reference(residuals, device_id: str, kind: str = "natural") -> ReferenceFingerprint:
    """Average residual planes into a device reference fingerprint."""
    residuals = list(residuals)
    if not residuals:
        raise ValueError("build_reference needs at least one residual")
    shape = residuals[0].plane.shape
    for r in residuals[1:]:
        if r.plane.shape != shape:
            raise ShapeError(f"residual shape {r.plane.shape} != {shape}")
    mean = np.mean([r.plane for r in residuals], axis=0)
    return ReferenceFingerprint(device_id, _zero_mean(mean), len(residuals), kind)


def ncc(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized cross-correlation; 0 for constant inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"ncc shapes differ: {a.shape} vs {b.shape}")
    ac = a - a.mean()
    bc = b - b.mean()
    denom = np.sqrt((ac * ac).sum() * (bc * bc).sum())
    if denom == 0.0:
        return 0.0
    return float((ac * bc).sum() / denom)


def cross_correlation_surface(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cyclic cross-correlation for every 2-D shift: rho[s] = sum_x a[x+s] b[x].

    With this convention, a == roll(b, s) peaks at shift s.
    """
    if a.shape != b.shape:
        raise ShapeError(f"correlation shapes differ: {a.shape} vs {b.shape}")
    return np.real(ifft2(fft2(a) * np.conj(fft2(b))))


def pce(residual, ref, exclude_radius: int = 5, threshold: float = PCE_THRESHOLD) -> PceReport:
    """Peak-to-correlation energy with a cyclically excluded peak square.

    PCE = rho_peak^2 / mean(rho^2 outside the (2r+1)^2 square at the peak);
    the peak is the largest-magnitude correlation over all cyclic shifts.
    """
    a = residual.plane if isinstance(residual, NoiseResidual) else np.asarray(residual, float)
    b = ref.plane if isinstance(ref, ReferenceFingerprint) else np.asarray(ref, float)
    if a.shape != b.shape:
        raise ShapeError(
            f"residual {a.shape} and reference {b.shape} sizes differ; resample the image first"
        )
    m, n = a.shape
    rho = cross_correlation_surface(a, b)
    peak_idx = np.unravel_index(np.argmax(np.abs(rho)), rho.shape)
    peak = rho[peak_idx]

    dr = np.abs(np.arange(m) - peak_idx[0])
    dc = np.abs(np.arange(n) - peak_idx[1])
    near_r = np.minimum(dr, m - dr) <= exclude_radius
    near_c = np.minimum(dc, n - dc) <= exclude_radius
    mask = np.outer(near_r, near_c)
    n_excluded = int(mask.sum())
    energy = float((rho * rho)[~mask].sum()) / (m * n - n_excluded)
    value = float(peak * peak / energy) if energy > 0 else float("inf")
    decision = "matched" if value >= threshold else "unmatched"
    return PceReport(value, (int(peak_idx[0]), int(peak_idx[1])), decision, threshold)


def pce_pipeline_downsampled(
    img: Image,
    ref: ReferenceFingerprint,
    params: DenoiseParams = DenoiseParams(),
    target: int = 224,
    exclude_radius: int = 5,
) -> PceReport:
    """Down-sample to target, up-sample back to the reference size, extract
    the residual and score it: the canonical removal-effectiveness check."""
    down = resize_bilinear(img, target, target)
    up = resize_bilinear(down, ref.plane.shape[0], ref.plane.shape[1])
    residual = extract_residual(up, params)
    return pce(residual, ref, exclude_radius=exclude_radius)


def save_fingerprint(ref: ReferenceFingerprint, path) -> None:
    """CFTR tensor plus a JSON sidecar with the metadata."""
    cftensor.write_tensor(path, ref.plane.astype(np.float64))
    meta = {
        "device_id": ref.device_id,
        "kind": ref.kind,
        "n_images": ref.n_images,
        "height": int(ref.plane.shape[0]),
        "width": int(ref.plane.shape[1]),
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def load_fingerprint(path) -> ReferenceFingerprint:
    plane = cftensor.read_tensor(path)
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    return ReferenceFingerprint(meta["device_id"], plane, meta["n_images"], meta["kind"])
