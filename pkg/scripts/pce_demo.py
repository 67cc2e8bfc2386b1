"""Fingerprint-removal demonstration: PCE before and after down-sampling.

Usage: python scripts/pce_demo.py [workdir]

Builds a 20-image reference for one simulated device and scores fresh test
images at full resolution (matched / cross-device) and through the
down-sample -> up-sample removal path.
"""

import sys

from camfp.dataset import load_manifest, load_row_image
from camfp.prnu import build_reference, extract_residual, pce, pce_pipeline_downsampled
from camfp.simcam import simulate_dataset


def main() -> int:
    workdir = sys.argv[1] if len(sys.argv) > 1 else "pce_demo"
    data = f"{workdir}/data"
    print(f"simulating 2 devices x 30 images -> {data}")
    simulate_dataset(data, n_models=1, devices_per_model=2, images_per_device=30, seed=7)
    manifest = f"{data}/manifest.jsonl"
    rows = load_manifest(manifest)
    dev_a, dev_b = sorted({r.device_id for r in rows})

    train_a = [r for r in rows if r.device_id == dev_a and r.split == "train"][:20]
    print(f"building 20-image reference for {dev_a}")
    ref = build_reference(
        [extract_residual(load_row_image(r, manifest), image_id=r.path) for r in train_a], dev_a
    )

    print(f"{'image':>28s} {'full-res PCE':>14s} {'down-up PCE':>12s}")
    for device in (dev_a, dev_b):
        for row in [r for r in rows if r.device_id == device and r.split == "test"][:3]:
            img = load_row_image(row, manifest)
            full = pce(extract_residual(img), ref)
            removed = pce_pipeline_downsampled(img, ref)
            tag = "matched" if device == dev_a else "other device"
            print(f"{row.path:>28s} {full.pce:14.1f} {removed.pce:12.1f}   ({tag}, {full.decision})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
