"""Synthetic camera-acquisition simulator.

Produces labeled multi-device datasets with a controllable high-frequency
PRNU pattern and controllable low/mid-frequency device signatures (channel
gains, per-channel response exponents, vignetting). Devices of the same
model share a base response, so classification has to rely on device-level
differences. The simulator is the ground-truth oracle for the test suite,
not a physical sensor model.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict, replace

import numpy as np
from scipy.ndimage import convolve, gaussian_filter

from . import cftensor
from .dataset import TRAIN_FRACTION, ManifestRow, save_manifest
from .errors import ShapeError, SplitError
from .imgcore import Image, JpegQuality, jpeg_roundtrip, save_image
from .sampling import derive_seed

DEFAULT_RESOLUTION = (896, 896)
SCENE_KINDS = ("gradient", "texture", "shapes", "flatfield")

# Device-level spreads around the model base.
GAIN_SPREAD = 0.03
GAMMA_SPREAD = 0.05
VIGNETTE_SPREAD = 0.04
MIN_GAIN_GAP = 0.01   # same-model pairs must differ by more than this on average
MIN_GAMMA_GAP = 0.035  # response-curvature gap floor; the scene- and tone-robust cue

_BINOMIAL_3X3 = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 16.0


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    model_id: str
    prnu: np.ndarray  # zero-mean unit-variance pattern at sensor resolution
    prnu_strength: float
    channel_gains: tuple[float, float, float]
    response_gamma: tuple[float, float, float]
    vignette_strength: float
    vignette_radius_power: float
    demosaic_alpha: float  # model-level blend into the 3x3 binomial surrogate
    seed: int

    def __post_init__(self):
        if self.prnu_strength < 0 or self.vignette_strength < 0:
            raise ValueError("strengths must be >= 0")
        if any(g <= 0 for g in self.channel_gains) or any(g <= 0 for g in self.response_gamma):
            raise ValueError("gains and gammas must be > 0")

    @property
    def resolution(self) -> tuple[int, int]:
        return self.prnu.shape


@dataclass(frozen=True)
class SceneSpec:
    kind: str
    height: int = DEFAULT_RESOLUTION[0]
    width: int = DEFAULT_RESOLUTION[1]
    scene_seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}; choose from {SCENE_KINDS}")
        if self.height % 224 or self.width % 224:
            raise ValueError(f"scene resolution must be a multiple of 224, got {self.height}x{self.width}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def make_device(
    model_id: str,
    device_index: int,
    seed: int,
    resolution: tuple[int, int] = DEFAULT_RESOLUTION,
    prnu_strength: float = 0.002,
    salt: int = 0,
) -> DeviceProfile:
    """One device: model-level base response plus small per-device offsets.

    The model base depends only on (model_id, seed); the salt perturbs the
    per-device draw and is used by make_device_family to enforce pairwise
    separability deterministically.
    """
    model_rng = _rng(derive_seed("model-base", seed, model_id))
    base_gains = 1.0 + model_rng.uniform(-0.06, 0.06, size=3)
    base_gamma = 1.0 + model_rng.uniform(-0.08, 0.08, size=3)
    base_vignette = float(np.clip(0.08 + model_rng.uniform(-0.03, 0.03), 0.01, None))
    demosaic_alpha = float(model_rng.uniform(0.10, 0.30))

    dev_rng = _rng(derive_seed("device", seed, model_id, device_index, salt))
    gains = base_gains + dev_rng.uniform(-GAIN_SPREAD, GAIN_SPREAD, size=3)
    gamma = base_gamma + dev_rng.uniform(-GAMMA_SPREAD, GAMMA_SPREAD, size=3)
    vignette = float(np.clip(base_vignette + dev_rng.uniform(-VIGNETTE_SPREAD, VIGNETTE_SPREAD), 0.005, None))

    pattern = dev_rng.standard_normal(resolution)
    pattern = (pattern - pattern.mean()) / pattern.std()

    return DeviceProfile(
        device_id=f"{model_id}_{device_index:02d}",
        model_id=model_id,
        prnu=pattern,
        prnu_strength=float(prnu_strength),
        channel_gains=tuple(float(g) for g in gains),
        response_gamma=tuple(float(g) for g in gamma),
        vignette_strength=vignette,
        vignette_radius_power=2.0,
        demosaic_alpha=demosaic_alpha,
        seed=seed,
    )


def _gain_gap(a: DeviceProfile, b: DeviceProfile) -> float:
    return float(np.mean(np.abs(np.asarray(a.channel_gains) - np.asarray(b.channel_gains))))


def _gamma_gap(a: DeviceProfile, b: DeviceProfile) -> float:
    return float(np.mean(np.abs(np.asarray(a.response_gamma) - np.asarray(b.response_gamma))))


def make_device_family(
    model_id: str,
    n_devices: int,
    seed: int,
    resolution: tuple[int, int] = DEFAULT_RESOLUTION,
    prnu_strength: float = 0.002,
) -> list[DeviceProfile]:
    """Same-model devices with enforced signature separability.

    Retries the per-device draws with an incremented salt until every pair's
    mean absolute gain gap exceeds MIN_GAIN_GAP; deterministic for a seed.
    """
    for salt in range(256):
        devices = [
            make_device(model_id, i, seed, resolution, prnu_strength, salt=salt)
            for i in range(n_devices)
        ]
        pairs = [(i, j) for i in range(n_devices) for j in range(i + 1, n_devices)]
        if all(
            _gain_gap(devices[i], devices[j]) > MIN_GAIN_GAP
            and _gamma_gap(devices[i], devices[j]) > MIN_GAMMA_GAP
            for i, j in pairs
        ):
            return devices
    raise RuntimeError(f"could not draw {n_devices} separable devices for {model_id}")


# --- scenes ----------------------------------------------------------------

def _coord_grids(h: int, w: int):
    y = np.linspace(0.0, 1.0, h)[:, None]
    x = np.linspace(0.0, 1.0, w)[None, :]
    return y, x


def _band_noise(rng, h: int, w: int, amplitude: float, sigma: float) -> np.ndarray:
    """Band-limited noise normalized to unit std, then scaled."""
    field = gaussian_filter(rng.standard_normal((h, w, 3)), (sigma, sigma, 0.0))
    return amplitude * field / field.std()


def _natural_detail(rng, h: int, w: int, mid_amp: float, fine_amp: float) -> np.ndarray:
    # Natural images carry mid-band and pixel-scale detail everywhere. Without
    # the mid band, interpolation of a smooth scene aliases nothing into the
    # down-sampled image and almost no residual energy is left to dilute what
    # survives of the PRNU after down-up resampling.
    mid = _band_noise(rng, h, w, mid_amp, float(rng.uniform(1.2, 2.5)))
    fine = _band_noise(rng, h, w, fine_amp, 0.6)
    return mid + fine


def _normalize_exposure(data: np.ndarray, rng) -> np.ndarray:
    # Auto-exposure surrogate: scale to a tightly metered mean luminance, the
    # way in-camera metering normalizes global brightness per shot. Without
    # it, scene-to-scene exposure variance is 30-100x larger than the device
    # signature and no per-image classifier can recover the device.
    target = rng.uniform(0.442, 0.458)
    lum = data @ np.asarray([0.299, 0.587, 0.114])
    return data * (target / max(lum.mean(), 1e-6))


def _scene_tint(rng, spread: float = 0.015) -> np.ndarray:
    # White-balanced content: channel casts stay within a few percent.
    return 1.0 + rng.uniform(-spread, spread, size=3)


def render_scene(spec: SceneSpec) -> Image:
    """Deterministic procedural scene with values inside [0.05, 0.95].

    Scenes emulate white-balanced, auto-exposed captures: a mild global tint,
    a metered mean luminance, and mid-band + pixel-scale detail everywhere.
    """
    h, w = spec.height, spec.width
    rng = _rng(derive_seed("scene", spec.kind, spec.scene_seed, h, w))
    y, x = _coord_grids(h, w)

    if spec.kind == "flatfield":
        level = rng.uniform(0.35, 0.85)
        cy, cx = rng.uniform(0.4, 0.6, size=2)
        r2 = (y - cy) ** 2 + (x - cx) ** 2
        falloff = 1.0 - 0.02 * r2 / r2.max()
        data = level * falloff[:, :, None] * _scene_tint(rng, 0.01)[None, None, :]
        data = data + _natural_detail(rng, h, w, 0.014, 0.006)
    elif spec.kind == "gradient":
        angle = rng.uniform(0.0, 2.0 * np.pi)
        ramp = np.cos(angle) * x + np.sin(angle) * y
        ramp = (ramp - ramp.min()) / (ramp.max() - ramp.min() + 1e-12)
        lo = rng.uniform(0.12, 0.35)
        hi = rng.uniform(0.60, 0.88)
        data = (lo + (hi - lo) * ramp)[:, :, None] * _scene_tint(rng)[None, None, :]
        data = data + _natural_detail(rng, h, w, 0.035, 0.012)
    elif spec.kind == "texture":
        sigma = rng.uniform(2.0, 3.5)
        common = gaussian_filter(rng.standard_normal((h, w)), sigma, mode="wrap")
        data = np.empty((h, w, 3))
        tint = _scene_tint(rng)
        for c in range(3):
            extra = gaussian_filter(rng.standard_normal((h, w)), sigma, mode="wrap")
            field = 0.94 * common + 0.06 * extra
            lo, hi = np.quantile(field, [0.001, 0.999])
            field = np.clip((field - lo) / (hi - lo + 1e-12), 0.0, 1.0)
            data[:, :, c] = (0.12 + 0.76 * field) * tint[c]
        data = data + _natural_detail(rng, h, w, 0.035, 0.012)
    else:  # shapes
        bg = render_scene(SceneSpec("gradient", h, w, spec.scene_seed ^ 0x5A5A)).data.copy()
        yy = np.arange(h)[:, None]
        xx = np.arange(w)[None, :]
        for _ in range(int(rng.integers(5, 12))):
            color = rng.uniform(0.15, 0.85) * (1.0 + rng.uniform(-0.05, 0.05, size=3))
            cy, cx = rng.uniform(0.1, 0.9) * h, rng.uniform(0.1, 0.9) * w
            if rng.random() < 0.5:
                radius = rng.uniform(0.04, 0.18) * min(h, w)
                dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
                alpha = np.clip((radius - dist) / 1.5 + 0.5, 0.0, 1.0)
            else:
                hy = rng.uniform(0.03, 0.15) * h
                hx = rng.uniform(0.03, 0.15) * w
                dist = np.maximum(np.abs(yy - cy) - hy, np.abs(xx - cx) - hx)
                alpha = np.clip(0.5 - dist / 1.5, 0.0, 1.0)
            bg = bg * (1.0 - alpha[:, :, None]) + color[None, None, :] * alpha[:, :, None]
        data = bg + _natural_detail(rng, h, w, 0.035, 0.012)

    return Image(np.clip(_normalize_exposure(data, rng), 0.05, 0.95))


# --- acquisition -----------------------------------------------------------

def _vignette_field(dev: DeviceProfile) -> np.ndarray:
    h, w = dev.resolution
    yy = (np.arange(h) - (h - 1) / 2.0)[:, None]
    xx = (np.arange(w) - (w - 1) / 2.0)[None, :]
    r = np.sqrt(yy**2 + xx**2)
    r_max = np.sqrt(((h - 1) / 2.0) ** 2 + ((w - 1) / 2.0) ** 2)
    return 1.0 - dev.vignette_strength * (r / r_max) ** dev.vignette_radius_power


def capture(
    scene: Image,
    dev: DeviceProfile,
    jpeg_q: JpegQuality | int | None = None,
    tone_exponent: float = 1.0,
) -> Image:
    """Simulated acquisition of a scene by a device.

    Per channel c: out = clamp((g_c * scene_c * (1 + k*prnu) * vig)^(1/gamma_c)),
    then a per-shot adaptive tone map out^tone_exponent (phones re-curve every
    shot; without this nuisance in the data, a test-side gamma manipulation
    moves all devices out of distribution at once), then the model's mild 3x3
    low-pass (demosaic surrogate), then optional JPEG round-trip. The PRNU is
    the only high-frequency device-specific term.
    """
    if (scene.height, scene.width) != dev.resolution:
        raise ShapeError(f"scene {scene.height}x{scene.width} != device resolution {dev.resolution}")
    if scene.channels != 3:
        raise ShapeError("capture needs a 3-channel scene")
    if tone_exponent <= 0:
        raise ValueError(f"tone_exponent must be > 0, got {tone_exponent}")
    prnu_term = 1.0 + dev.prnu_strength * dev.prnu
    vig = _vignette_field(dev)
    out = np.empty_like(scene.data)
    for c in range(3):
        base = dev.channel_gains[c] * scene.data[:, :, c] * prnu_term * vig
        out[:, :, c] = np.clip(np.maximum(base, 0.0) ** (1.0 / dev.response_gamma[c]), 0.0, 1.0)
    if tone_exponent != 1.0:
        out = out**tone_exponent
    a = dev.demosaic_alpha
    for c in range(3):
        out[:, :, c] = (1.0 - a) * out[:, :, c] + a * convolve(out[:, :, c], _BINOMIAL_3X3, mode="nearest")
    img = Image(np.clip(out, 0.0, 1.0))
    if jpeg_q is not None:
        img = jpeg_roundtrip(img, jpeg_q)
    return img


# --- dataset generation ------------------------------------------------------

def save_device_profile(dev: DeviceProfile, out_dir) -> None:
    meta = asdict(dev)
    meta.pop("prnu")
    meta["resolution"] = list(dev.resolution)
    with open(os.path.join(out_dir, f"{dev.device_id}.json"), "w") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")
    cftensor.write_tensor(os.path.join(out_dir, f"{dev.device_id}.cft"), dev.prnu)


def load_device_profile(out_dir, device_id: str) -> DeviceProfile:
    with open(os.path.join(out_dir, f"{device_id}.json")) as fh:
        meta = json.load(fh)
    prnu = cftensor.read_tensor(os.path.join(out_dir, f"{device_id}.cft"))
    meta.pop("resolution", None)
    meta["prnu"] = prnu
    meta["channel_gains"] = tuple(meta["channel_gains"])
    meta["response_gamma"] = tuple(meta["response_gamma"])
    return DeviceProfile(**meta)


def simulate_dataset(
    out_dir,
    n_models: int = 3,
    devices_per_model: int = 2,
    images_per_device: int = 40,
    scene_kinds: tuple[str, ...] = SCENE_KINDS,
    jpeg_q: int | None = None,
    seed: int = 0,
    resolution: tuple[int, int] = DEFAULT_RESOLUTION,
    prnu_strength: float = 0.002,
    tone_jitter: float = 1.35,
) -> list[ManifestRow]:
    """Write a labeled multi-device dataset with a 75/25 per-device split.

    Scene kinds cycle round-robin per device so the kind distribution is
    identical for every class and cannot act as a label cue. Each scene index
    also draws a per-shot tone-mapping exponent (log-uniform within
    [1/tone_jitter, tone_jitter], shared across devices) so tone is a
    nuisance dimension rather than a class cue.
    """
    os.makedirs(out_dir, exist_ok=True)
    device_dir = os.path.join(out_dir, "devices")
    os.makedirs(device_dir, exist_ok=True)

    devices: list[DeviceProfile] = []
    for m in range(n_models):
        devices.extend(
            make_device_family(f"model{m}", devices_per_model, seed, resolution, prnu_strength)
        )

    rows = []
    for dev in devices:
        os.makedirs(os.path.join(out_dir, dev.device_id), exist_ok=True)
        save_device_profile(dev, device_dir)
        for i in range(images_per_device):
            kind = scene_kinds[i % len(scene_kinds)]
            # Scene seeds depend on the image index only: every device shoots
            # the same scene set (controlled-acquisition protocol), so scene
            # content carries no device information and the learner has to
            # rely on the device response.
            spec = SceneSpec(kind, resolution[0], resolution[1], derive_seed("scene-seed", seed, i))
            tone_rng = _rng(derive_seed("tone", seed, i))
            tone = float(np.exp(tone_rng.uniform(-np.log(tone_jitter), np.log(tone_jitter))))
            img = capture(render_scene(spec), dev, jpeg_q, tone_exponent=tone)
            rel = os.path.join(dev.device_id, f"img{i:04d}.png")
            save_image(img, os.path.join(out_dir, rel))
            rows.append(ManifestRow(path=rel, device_id=dev.device_id, model_id=dev.model_id, scene_kind=kind))

    # 75/25 per-device image-level split, aligned on the scene index: a scene
    # is train for every device or test for every device, so memorized scene
    # content can neither help nor systematically mislead at test time.
    n_train = min(int(round(TRAIN_FRACTION * images_per_device)), images_per_device - 1)
    if images_per_device < 4:
        raise SplitError(f"need >= 4 images per device for a 75/25 split, got {images_per_device}")
    split_rng = np.random.Generator(np.random.Philox(derive_seed("split", seed)))
    train_idx = set(split_rng.permutation(images_per_device)[:n_train].tolist())
    rows = [
        replace(r, split="train" if int(r.path[-8:-4]) in train_idx else "test") for r in rows
    ]
    save_manifest(rows, os.path.join(out_dir, "manifest.jsonl"))
    return rows
