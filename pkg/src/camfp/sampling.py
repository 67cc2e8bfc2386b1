"""PRNU-free patch formation: bilinear down-sampling and random pixel
sampling, with per-item deterministic seeding.

Random modes permute (row, col) coordinates and move whole RGB triples, so
pixel-value marginals and the device's color response survive while spatial
structure (and with it the PRNU's synchronization) is destroyed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ShapeError
from .imgcore import Image, resize_bilinear

PATCH_SIDE = 224
PATCH_PIXELS = PATCH_SIDE * PATCH_SIDE

MODES = ("down", "random_orig", "random_down")


@dataclass(frozen=True)
class Patch:
    data: np.ndarray  # (224, 224, 3)
    source_image_id: str
    device_id: str
    mode: str
    patch_index: int
    seed: int

    def __post_init__(self):
        if self.data.shape != (PATCH_SIDE, PATCH_SIDE, 3):
            raise ShapeError(f"patch must be {PATCH_SIDE}x{PATCH_SIDE}x3, got {self.data.shape}")
        if self.mode not in MODES:
            raise ValueError(f"unknown sampling mode {self.mode!r}")


@dataclass(frozen=True)
class SamplingPlan:
    mode: str
    patches_per_image: int = 50
    seed: int = 0
    target: int = PATCH_SIDE

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown sampling mode {self.mode!r}; choose from {MODES}")
        if self.patches_per_image < 1:
            raise ValueError(f"patches_per_image must be >= 1, got {self.patches_per_image}")
        if self.target != PATCH_SIDE:
            raise ValueError(f"patch target is fixed at {PATCH_SIDE}")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary (seed, image_id, index) parts."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2s(text.encode()).digest()[:8], "little")


def _rng(seed: int) -> np.random.Generator:
    # Philox: counter-based, so streams are independent per derived seed and
    # generation order across workers cannot change the draws.
    return np.random.Generator(np.random.Philox(seed))


def down_patch(img: Image, image_id: str = "", device_id: str = "") -> Patch:
    """The single down-sampled 224x224x3 patch of an image."""
    if img.channels != 3:
        raise ShapeError(f"down_patch needs a 3-channel image, got {img.channels}")
    data = resize_bilinear(img, PATCH_SIDE, PATCH_SIDE).data
    return Patch(data, image_id, device_id, "down", 0, 0)


def random_patches_from_original(
    img: Image, plan: SamplingPlan, image_id: str = "", device_id: str = ""
) -> list[Patch]:
    """Patches drawn from one joint permutation of all source coordinates.

    No coordinate repeats anywhere across the returned patches: pixel k of
    patch p is the (p * 224^2 + k)-th element of the permutation.
    """
    if img.channels != 3:
        raise ShapeError(f"random sampling needs a 3-channel image, got {img.channels}")
    n_pixels = img.height * img.width
    needed = plan.patches_per_image * PATCH_PIXELS
    if needed > n_pixels:
        raise CapacityError(
            f"{plan.patches_per_image} patches need {needed} pixels but the image has "
            f"{n_pixels}; maximum feasible count is {n_pixels // PATCH_PIXELS}"
        )
    seed = derive_seed(plan.seed, image_id)
    perm = _rng(seed).permutation(n_pixels)[:needed]
    flat = img.data.reshape(n_pixels, img.channels)
    stack = flat[perm].reshape(plan.patches_per_image, PATCH_SIDE, PATCH_SIDE, 3)
    return [
        Patch(stack[i].copy(), image_id, device_id, "random_orig", i, seed)
        for i in range(plan.patches_per_image)
    ]


def random_patches_from_downsampled(
    img: Image, plan: SamplingPlan, image_id: str = "", device_id: str = ""
) -> list[Patch]:
    """Patches that each permute all pixels of the down-sampled image.

    Each pixel is used exactly once within a patch; reuse across patches is
    unavoidable (the down-sampled source has exactly one patch worth of
    pixels) and intended.
    """
    base = down_patch(img, image_id, device_id).data.reshape(PATCH_PIXELS, 3)
    patches = []
    for i in range(plan.patches_per_image):
        seed = derive_seed(plan.seed, image_id, i)
        perm = _rng(seed).permutation(PATCH_PIXELS)
        data = base[perm].reshape(PATCH_SIDE, PATCH_SIDE, 3)
        patches.append(Patch(data, image_id, device_id, "random_down", i, seed))
    return patches


def make_patches(img: Image, plan: SamplingPlan, image_id: str = "", device_id: str = "") -> list[Patch]:
    """Dispatch on plan.mode; 'down' always yields exactly one patch."""
    if plan.mode == "down":
        return [down_patch(img, image_id, device_id)]
    if plan.mode == "random_orig":
        return random_patches_from_original(img, plan, image_id, device_id)
    return random_patches_from_downsampled(img, plan, image_id, device_id)
