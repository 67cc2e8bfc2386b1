"""Simulate a small multi-device dataset and run the down-sampling pipeline.

Usage: python scripts/run_down_experiment.py [workdir]

Generates 3 models x 2 devices x 40 images (896x896), then runs the full
experiment (PRNU audit -> patches -> residual net -> GAP features -> SVM)
and prints the patch- and image-level accuracies.
"""

import json
import sys
import time

from camfp.experiment import ExperimentConfig, run_experiment
from camfp.nn import TrainConfig
from camfp.simcam import simulate_dataset


def main() -> int:
    workdir = sys.argv[1] if len(sys.argv) > 1 else "down_experiment"
    data_dir = f"{workdir}/data"
    t0 = time.time()
    print(f"simulating dataset -> {data_dir}")
    simulate_dataset(data_dir, n_models=3, devices_per_model=2, images_per_device=40, seed=42)
    print(f"dataset ready in {time.time() - t0:.0f}s")

    config = ExperimentConfig(
        manifest=f"{data_dir}/manifest.jsonl",
        out_dir=f"{workdir}/run_down",
        mode="down",
        train=TrainConfig(epochs=20, batch_size=12, learning_rate=0.001, seed=0),
    )
    report, _ = run_experiment(config, progress=lambda s: print(f"[{s}]"))
    payload = json.load(open(f"{workdir}/run_down/report.json"))
    print(f"patch accuracy: {report.accuracy:.2f}%")
    print(f"image accuracy: {payload['image_level']['accuracy']:.2f}%")
    print(f"PRNU audit max PCE: {payload['prnu_audit']['max_pce']:.1f} (threshold 50)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
