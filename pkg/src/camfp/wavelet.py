"""Orthogonal discrete wavelet transform and the wavelet-domain Wiener
denoiser that yields noise residuals.

The transform is a separable 8-tap Daubechies filter bank with periodic
boundary extension, so the analysis operator is orthonormal and inversion is
exact to round-off. Inputs whose sides are not a multiple of 2^levels are
edge-padded first; the pyramid records the original size and idwt2 crops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ShapeError

# 8-tap Daubechies analysis low-pass (orthonormal: sums to sqrt(2)).
DAUB8_LO = np.array([
    0.23037781330885523,
    0.71484657055254150,
    0.63088076792959040,
    -0.02798376941698385,
    -0.18703481171888114,
    0.03084138183598697,
    0.03288301166698295,
    -0.01059740178499728,
])
# Quadrature mirror high-pass: g[n] = (-1)^n h[L-1-n].
DAUB8_HI = (DAUB8_LO[::-1] * np.array([1.0, -1.0] * 4)).copy()

_TAPS = len(DAUB8_LO)


@dataclass(frozen=True)
class DenoiseParams:
    """Wiener residual filter parameters (8-bit intensity units)."""

    sigma0_sq: float = 9.0
    window_sizes: tuple[int, ...] = (3, 5, 7, 9)
    levels: int = 4

    def __post_init__(self):
        if self.sigma0_sq <= 0:
            raise ValueError(f"sigma0_sq must be > 0, got {self.sigma0_sq}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if not self.window_sizes or any(w < 3 or w % 2 == 0 for w in self.window_sizes):
            raise ValueError(f"window sizes must be odd and >= 3, got {self.window_sizes}")


@dataclass
class WaveletPyramid:
    """Detail subbands (horizontal, vertical, diagonal) fine-to-coarse plus
    the final approximation, with the pre-padding size for exact inversion."""

    details: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    approx: np.ndarray
    orig_shape: tuple[int, int]

    @property
    def levels(self) -> int:
        return len(self.details)

    def map_details(self, fn) -> "WaveletPyramid":
        new = [(fn(h), fn(v), fn(d)) for h, v, d in self.details]
        return WaveletPyramid(new, self.approx.copy(), self.orig_shape)


def _analyze_axis(x: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(_TAPS)[None, :]) % n
    windows = x[..., idx]
    low = windows @ DAUB8_LO
    high = windows @ DAUB8_HI
    return np.moveaxis(low, -1, axis), np.moveaxis(high, -1, axis)


def _synthesize_axis(low: np.ndarray, high: np.ndarray, axis: int) -> np.ndarray:
    low = np.moveaxis(low, axis, -1)
    high = np.moveaxis(high, axis, -1)
    half = low.shape[-1]
    n = 2 * half
    out = np.zeros(low.shape[:-1] + (n,), dtype=low.dtype)
    base = 2 * np.arange(half)
    # Transpose of the orthonormal analysis operator; for fixed tap t the
    # target indices (2k + t) mod n are distinct, so plain fancy add is safe.
    for t in range(_TAPS):
        idx = (base + t) % n
        out[..., idx] += low * DAUB8_LO[t] + high * DAUB8_HI[t]
    return np.moveaxis(out, -1, axis)


def dwt2(plane: np.ndarray, levels: int = 4) -> WaveletPyramid:
    """Multi-level separable analysis of a 2-D plane."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ShapeError(f"dwt2 expects a 2-D plane, got shape {plane.shape}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    h, w = plane.shape
    mult = 1 << levels
    if h < 2 or w < 2:
        raise ShapeError(f"plane too small for dwt2: {plane.shape}")
    pad_h = (-h) % mult
    pad_w = (-w) % mult
    approx = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge") if (pad_h or pad_w) else plane
    details = []
    for _ in range(levels):
        lo_w, hi_w = _analyze_axis(approx, 1)
        ll, dh = _analyze_axis(lo_w, 0)   # dh: high along rows (horizontal detail)
        dv, dd = _analyze_axis(hi_w, 0)
        details.append((dh, dv, dd))
        approx = ll
    return WaveletPyramid(details, approx, (h, w))


def idwt2(pyr: WaveletPyramid) -> np.ndarray:
    """Exact inverse of dwt2, cropped to the recorded original size."""
    approx = pyr.approx
    for dh, dv, dd in reversed(pyr.details):
        if dh.shape != approx.shape or dv.shape != approx.shape or dd.shape != approx.shape:
            raise ShapeError(
                f"inconsistent subband shapes {dh.shape}/{dv.shape}/{dd.shape} vs {approx.shape}"
            )
        lo_w = _synthesize_axis(approx, dh, 0)
        hi_w = _synthesize_axis(dv, dd, 0)
        approx = _synthesize_axis(lo_w, hi_w, 1)
    h, w = pyr.orig_shape
    return approx[:h, :w]


def wiener_residual(plane: np.ndarray, params: DenoiseParams = DenoiseParams()) -> np.ndarray:
    """Noise residual of a plane in [0, 255] intensity scale.

    Per detail coefficient c: local signal variance is the minimum over the
    configured windows of max(0, boxmean(c^2) - sigma0_sq); the residual
    coefficient is c * sigma0_sq / (sigvar + sigma0_sq). The approximation
    band is zeroed, so the inverse transform is the noise component directly
    (image minus denoised image in one pass).
    """
    s0 = float(params.sigma0_sq)
    pyr = dwt2(np.asarray(plane, dtype=np.float64), params.levels)

    def attenuate(c):
        energy = c * c
        sig = None
        for w in params.window_sizes:
            est = uniform_filter(energy, size=w, mode="wrap") - s0
            sig = est if sig is None else np.minimum(sig, est)
        sig = np.maximum(sig, 0.0)
        return c * (s0 / (sig + s0))

    resid = pyr.map_details(attenuate)
    resid.approx = np.zeros_like(resid.approx)
    return idwt2(resid)
