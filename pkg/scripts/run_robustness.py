"""Robustness sweep over a finished down-sampling run.

Usage: python scripts/run_robustness.py <workdir from run_down_experiment.py>

Re-evaluates the trained model with gamma correction, rotation, and JPEG
compression applied to the test images before down-sampling.
"""

import sys

from camfp.experiment import ExperimentConfig, evaluate_manipulated
from camfp.manip import ManipSpec
from camfp.nn import TrainConfig

SPECS = [
    ("gamma 0.7", ManipSpec("gamma", gamma=0.7)),
    ("gamma 1.4", ManipSpec("gamma", gamma=1.4)),
    ("rotate 15", ManipSpec("rotate", angle=15.0)),
    ("rotate 30", ManipSpec("rotate", angle=30.0)),
    ("rotate 90", ManipSpec("rotate", angle=90.0)),
    ("jpeg Q90", ManipSpec("jpeg", quality=90)),
    ("jpeg Q50", ManipSpec("jpeg", quality=50)),
    ("jpeg Q20", ManipSpec("jpeg", quality=20)),
]


def main() -> int:
    workdir = sys.argv[1] if len(sys.argv) > 1 else "down_experiment"
    run_dir = f"{workdir}/run_down"
    config = ExperimentConfig(
        manifest=f"{workdir}/data/manifest.jsonl",
        out_dir=run_dir,
        mode="down",
        train=TrainConfig(epochs=20, batch_size=12, learning_rate=0.001, seed=0),
    )
    for i, (name, spec) in enumerate(SPECS):
        report = evaluate_manipulated(config, run_dir, spec, f"{workdir}/robust_{i}")
        print(f"{name:10s}: {report.accuracy:6.2f}%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
