"""CLI surface + experiment orchestration on a small synthetic dataset.

Dataset resolution 448 keeps these integration tests fast; the down-sampling
removal path needs the full 896 ratio, so the pipeline here runs in
random-sampling mode (PRNU-free at any resolution).
"""

import json
import os

import numpy as np
import pytest

from camfp.cli import main
from camfp.dataset import load_manifest, load_patch_index
from camfp.errors import AuditError
from camfp.experiment import ExperimentConfig, config_from_dict, generate_patches, run_experiment
from camfp.nn import TrainConfig


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("simdata")
    out = root / "data"
    rc = main([
        "simulate", "--out", str(out), "--models", "2", "--devices-per-model", "2",
        "--images-per-device", "6", "--seed", "11", "--resolution", "448",
    ])
    assert rc == 0
    return out


def test_simulate_manifest_valid(dataset):
    rows = load_manifest(dataset / "manifest.jsonl")
    assert len(rows) == 24
    assert {r.split for r in rows} == {"train", "test"}


def test_fingerprint_and_pce_cli(dataset, tmp_path, capsys):
    fp = tmp_path / "dev.cft"
    rc = main([
        "fingerprint-build", "--manifest", str(dataset / "manifest.jsonl"),
        "--device", "model0_00", "--out", str(fp), "--images", "4", "--split", "train",
    ])
    assert rc == 0 and fp.exists() and (tmp_path / "dev.cft.json").exists()
    rows = load_manifest(dataset / "manifest.jsonl")
    own = next(r for r in rows if r.device_id == "model0_00" and r.split == "test")
    rc = main(["pce", "--image", str(dataset / own.path), "--fingerprint", str(fp)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["decision"] == "matched" and report["pce"] > 50
    # Cross-device probe: must use a test-split image (test scenes are
    # disjoint from the reference's training scenes, so no scene leakage).
    other = next(r for r in rows if r.device_id == "model1_00" and r.split == "test")
    rc = main(["pce", "--image", str(dataset / other.path), "--fingerprint", str(fp)])
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["decision"] == "unmatched"


def test_patches_cli_and_worker_determinism(dataset, tmp_path):
    out1, out2 = tmp_path / "p1", tmp_path / "p2"
    for out, workers in ((out1, "0"), (out2, "2")):
        rc = main([
            "patches", "--manifest", str(dataset / "manifest.jsonl"), "--out", str(out),
            "--mode", "random_down", "--patches-per-image", "2", "--seed", "3",
            "--workers", workers,
        ])
        assert rc == 0
    idx1, idx2 = load_patch_index(out1 / "index.jsonl"), load_patch_index(out2 / "index.jsonl")
    assert idx1 == idx2
    for row in idx1:
        assert (out1 / row.patch_file).read_bytes() == (out2 / row.patch_file).read_bytes()


def test_manip_cli_single_file(dataset, tmp_path):
    rows = load_manifest(dataset / "manifest.jsonl")
    src = dataset / rows[0].path
    out = tmp_path / "g.png"
    rc = main(["manip", "--op", "gamma", "--param", "1.4", "--in", str(src), "--out", str(out)])
    assert rc == 0 and out.exists()
    from camfp.imgcore import load_image

    a = load_image(src)
    b = load_image(out)
    expected = np.clip(np.round((a.data**1.4) * 255) / 255, 0, 1)
    assert np.abs(b.data - expected).max() <= 1.0 / 255


def test_manip_cli_directory(dataset, tmp_path):
    indir = dataset / "model0_00"
    out = tmp_path / "rotated"
    rc = main(["manip", "--op", "rotate", "--param", "90", "--in", str(indir), "--out", str(out)])
    assert rc == 0
    assert len(list(out.glob("*.png"))) == len(list(indir.glob("*.png")))


@pytest.fixture(scope="module")
def experiment(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("exp") / "run"
    config = ExperimentConfig(
        manifest=str(dataset / "manifest.jsonl"),
        out_dir=str(out),
        mode="random_down",
        patches_per_image=2,
        train=TrainConfig(epochs=3, batch_size=8, seed=0),
        audit_images=4,
        audit_ref_images=4,
    )
    report, artifacts = run_experiment(config)
    return out, report, artifacts


def test_experiment_artifacts_exist(experiment):
    out, report, artifacts = experiment
    for rel in artifacts.values():
        assert (out / rel).exists()
    payload = json.loads((out / "report.json").read_text())
    assert payload["prnu_audit"]["mean_pce"] < 50
    assert payload["leakage"]["overlap"] == 0
    assert payload["dataset"]["n_train_patches"] == 4 * 4 * 2  # 4 devices x 4 train x 2
    assert len(payload["loss_curve"]) == 3


def test_experiment_features_csv_format(experiment):
    out, _, _ = experiment
    header = (out / "features_train.csv").read_text().splitlines()[0]
    assert header.startswith("device_id,source_image_id,f0,")
    assert header.count(",") == 65  # 2 id columns + 64 feature columns


def test_cli_stagewise_pipeline(dataset, experiment, tmp_path):
    """features -> svm-train -> classify -> evaluate -> embed from files."""
    out, _, _ = experiment
    model_dir = out / "model"
    patches = out / "patches"
    feats_csv = tmp_path / "test_feats.csv"
    rc = main(["features", "--model", str(model_dir), "--patches", str(patches),
               "--out", str(feats_csv), "--split", "test"])
    assert rc == 0
    svm_dir = tmp_path / "svm"
    rc = main(["svm-train", "--features", str(out / "features_train.csv"), "--out", str(svm_dir)])
    assert rc == 0
    preds_csv = tmp_path / "preds.csv"
    rc = main(["classify", "--svm", str(svm_dir), "--features", str(feats_csv), "--out", str(preds_csv)])
    assert rc == 0
    report_json = tmp_path / "eval.json"
    rc = main(["evaluate", "--predictions", str(preds_csv), "--out", str(report_json)])
    assert rc == 0
    payload = json.loads(report_json.read_text())
    assert 0.0 <= payload["patch_level"]["accuracy"] <= 100.0
    embed_csv = tmp_path / "embed.csv"
    rc = main(["embed", "--features", str(out / "features_train.csv"), "--out", str(embed_csv)])
    assert rc == 0
    assert embed_csv.read_text().splitlines()[0] == "device_id,source_image_id,p0,p1"


def test_run_cli_round_trips_config(dataset, tmp_path):
    cfg = {
        "mode": "random_down",
        "patches_per_image": 1,
        "train": {"epochs": 1, "batch_size": 8},
        "audit_images": 2,
        "audit_ref_images": 3,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "run"
    rc = main(["run", "--config", str(cfg_path), "--manifest", str(dataset / "manifest.jsonl"),
               "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["mode"] == "random_down"
    assert payload["config"]["train"]["epochs"] == 1


def test_audit_catches_surviving_prnu(tmp_path):
    # A strong pattern at a 2x down-sampling ratio survives the removal path;
    # the pre-training audit must abort the run.
    data = tmp_path / "strong"
    rc = main([
        "simulate", "--out", str(data), "--models", "1", "--devices-per-model", "2",
        "--images-per-device", "6", "--seed", "11", "--resolution", "448",
        "--prnu-strength", "0.02",
    ])
    assert rc == 0
    config = ExperimentConfig(
        manifest=str(data / "manifest.jsonl"),
        out_dir=str(tmp_path / "bad"),
        mode="down",
        train=TrainConfig(epochs=1, batch_size=8),
        audit_images=2,
        audit_ref_images=4,
    )
    with pytest.raises(AuditError):
        run_experiment(config)


def test_config_from_dict_round_trip():
    cfg = ExperimentConfig(
        manifest="m.jsonl", out_dir="o", mode="random_orig", patches_per_image=3,
        train=TrainConfig(epochs=2), audit_images=1,
    )
    clone = config_from_dict(cfg.to_dict(), manifest="m.jsonl", out_dir="o")
    assert clone == cfg
