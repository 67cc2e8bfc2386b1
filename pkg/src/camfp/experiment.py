"""End-to-end experiment: patches -> residual-net training -> GAP features
-> SVM -> evaluation, with the PRNU-free audit enforced before training.

Every intermediate persists under the experiment directory; the report JSON
contains no absolute paths or timestamps, so a rerun with identical config
and seeds reproduces it byte for byte.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import cftensor
from .dataset import (
    ManifestRow,
    PatchFileDataset,
    PatchIndexRow,
    assert_no_leakage,
    load_manifest,
    load_row_image,
    manifest_devices,
    save_patch_index,
    split_manifest,
)
from .errors import AuditError, DataError
from .imgcore import Image, resize_bilinear
from .manip import ManipSpec, apply as apply_manip
from .metrics import EvalReport, evaluate, majority_vote
from .nn import (
    MiniResNet,
    MiniResNetConfig,
    TrainConfig,
    extract_features_batch,
    save_model,
    train,
)
from .prnu import PCE_THRESHOLD, build_reference, extract_residual, pce
from .sampling import SamplingPlan, make_patches
from .svm import svm_predict_batch, svm_train, save_svm
from .wavelet import DenoiseParams


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: str
    out_dir: str
    mode: str = "down"
    patches_per_image: int = 10      # random modes only; 'down' always yields 1
    sampling_seed: int = 0
    model_seed: int = 0
    split_seed: int = 0
    svm_c: float = 10.0
    svm_gamma: float | str = "auto"
    svm_seed: int = 0
    stem_channels: int = 16
    stage_channels: tuple[int, ...] = (16, 32, 64)
    blocks_per_stage: int = 2
    train: TrainConfig = field(default_factory=TrainConfig)
    manip: ManipSpec | None = None   # test-side only, applied before sampling
    audit_images: int = 10
    audit_ref_images: int = 12

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_channels"] = list(self.stage_channels)
        d["manip"] = None if self.manip is None else asdict(self.manip)
        d.pop("manifest")
        d.pop("out_dir")
        return d


def config_from_dict(d: dict, manifest: str, out_dir: str) -> ExperimentConfig:
    d = dict(d)
    train_cfg = TrainConfig(**d.pop("train", {}))
    manip_d = d.pop("manip", None)
    manip = ManipSpec(**manip_d) if manip_d else None
    if "stage_channels" in d:
        d["stage_channels"] = tuple(d["stage_channels"])
    return ExperimentConfig(manifest=manifest, out_dir=out_dir, train=train_cfg, manip=manip, **d)


# --- patch generation -------------------------------------------------------


def _patch_task(args):
    (manifest_path, row_dict, mode, patches_per_image, seed, manip_dict) = args
    row = ManifestRow(**row_dict)
    img = load_row_image(row, manifest_path)
    if manip_dict is not None and row.split == "test":
        img = apply_manip(img, ManipSpec(**manip_dict))
    plan = SamplingPlan(mode, patches_per_image if mode != "down" else 1, seed)
    patches = make_patches(img, plan, image_id=row.path, device_id=row.device_id)
    return row.split, [(p.data.astype(np.float32), p.source_image_id, p.device_id, p.mode, p.patch_index, p.seed) for p in patches]


def generate_patches(
    rows,
    manifest_path,
    out_dir,
    mode: str,
    patches_per_image: int,
    seed: int,
    manip: ManipSpec | None = None,
    workers: int = 0,
) -> list[PatchIndexRow]:
    """Write patch tensors + index for every manifest row.

    Per-item seeding makes results identical at any worker count.
    """
    os.makedirs(out_dir, exist_ok=True)
    from dataclasses import asdict as as_d

    manip_dict = None if manip is None else as_d(manip)
    tasks = [
        (manifest_path, as_d(row), mode, patches_per_image, seed, manip_dict) for row in rows
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_patch_task, tasks, chunksize=4))
    else:
        results = [_patch_task(t) for t in tasks]

    index: list[PatchIndexRow] = []
    counter = 0
    for split, patches in results:
        for data, image_id, device_id, pmode, patch_index, pseed in patches:
            name = f"patch_{counter:06d}.cft"
            cftensor.write_tensor(os.path.join(out_dir, name), data)
            index.append(
                PatchIndexRow(name, device_id, image_id, pmode, patch_index, int(pseed), split)
            )
            counter += 1
    save_patch_index(index, os.path.join(out_dir, "index.jsonl"))
    return index


# --- PRNU-free audit ---------------------------------------------------------


def prnu_free_audit(
    rows,
    manifest_path,
    mode: str,
    sampling_seed: int,
    n_audit: int = 10,
    n_ref: int = 12,
    params: DenoiseParams = DenoiseParams(),
) -> dict:
    """Verify the sampling transform leaves test images PRNU-free.

    Builds per-device references from training images, pushes audit test
    images through the mode's transform, up-samples, and requires PCE < 50
    against the own-device reference. Raises AuditError otherwise.
    """
    devices = manifest_devices(rows)
    refs = {}
    for device in devices:
        train_rows = [r for r in rows if r.device_id == device and r.split == "train"][:n_ref]
        if not train_rows:
            raise DataError(f"device {device} has no training images for the audit")
        residuals = [
            extract_residual(load_row_image(r, manifest_path), params, image_id=r.path)
            for r in train_rows
        ]
        refs[device] = build_reference(residuals, device)

    by_device = {d: [r for r in rows if r.device_id == d and r.split == "test"] for d in devices}
    audit_rows = []
    i = 0
    while len(audit_rows) < n_audit and any(by_device.values()):
        device = devices[i % len(devices)]
        if by_device[device]:
            audit_rows.append(by_device[device].pop(0))
        i += 1

    results = []
    for row in audit_rows:
        img = load_row_image(row, manifest_path)
        plan = SamplingPlan(mode, 1, sampling_seed)
        patch = make_patches(img, plan, image_id=row.path, device_id=row.device_id)[0]
        ref = refs[row.device_id]
        up = resize_bilinear(Image(patch.data), ref.plane.shape[0], ref.plane.shape[1])
        report = pce(extract_residual(up, params), ref)
        results.append({"image": row.path, "device_id": row.device_id, "pce": report.pce})
    mean_pce = float(np.mean([r["pce"] for r in results]))
    # Removal gate follows the average-PCE criterion (the searched-peak PCE
    # of one up-sampled patch has extreme-value excursions; the mean does not).
    if mean_pce >= PCE_THRESHOLD:
        raise AuditError(
            f"PRNU still detectable after '{mode}' transform: "
            f"mean PCE {mean_pce:.1f} >= threshold {PCE_THRESHOLD} over {len(results)} images"
        )
    return {
        "n_audited": len(results),
        "max_pce": max(r["pce"] for r in results),
        "mean_pce": mean_pce,
        "per_image": results,
    }


# --- features ---------------------------------------------------------------


def _write_features_csv(path, rows, features: np.ndarray) -> None:
    dim = features.shape[1]
    header = "device_id,source_image_id," + ",".join(f"f{i}" for i in range(dim))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, vec in zip(rows, features):
            vals = ",".join(repr(float(v)) for v in vec)
            fh.write(f"{row.device_id},{row.source_image_id},{vals}\n")


def read_features_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    device_ids, image_ids, feats = [], [], []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("device_id,source_image_id"):
            raise DataError(f"not a features CSV: {path}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            device_ids.append(parts[0])
            image_ids.append(parts[1])
            feats.append([float(v) for v in parts[2:]])
    return device_ids, image_ids, np.asarray(feats, dtype=np.float64)


def compute_features(model: MiniResNet, dataset: PatchFileDataset, batch: int = 24) -> np.ndarray:
    out = []
    for start in range(0, len(dataset), batch):
        stack = np.stack([dataset[i][0] for i in range(start, min(start + batch, len(dataset)))])
        out.append(extract_features_batch(model, stack))
    return np.concatenate(out, axis=0)


def evaluate_manipulated(
    config: ExperimentConfig, run_dir, manip: ManipSpec, out_dir
) -> EvalReport:
    """Re-evaluate a finished run with a manipulation on the test side.

    Test images are manipulated BEFORE the sampling transform, then scored
    with the run's trained network and SVM (training stays untouched).
    """
    from .nn import load_model
    from .svm import load_svm

    rows = load_manifest(config.manifest)
    if any(not r.split for r in rows):
        rows = split_manifest(rows, config.split_seed)
    test_rows = [r for r in rows if r.split == "test"]
    devices = manifest_devices(rows)
    os.makedirs(out_dir, exist_ok=True)
    index = generate_patches(
        test_rows, config.manifest, out_dir, config.mode,
        config.patches_per_image, config.sampling_seed, manip=manip,
    )
    model = load_model(os.path.join(run_dir, "model"))
    svm_model = load_svm(os.path.join(run_dir, "svm"))
    ds = PatchFileDataset(index, out_dir, devices)
    feats = compute_features(model, ds)
    predictions = svm_predict_batch(svm_model, feats)
    pairs = [(r.device_id, p) for r, p in zip(index, predictions)]
    from dataclasses import asdict as as_d

    return evaluate(pairs, classes=devices, metadata={"level": "patch", "manip": as_d(manip)})


# --- the full experiment ------------------------------------------------------


def run_experiment(config: ExperimentConfig, progress=None) -> tuple[EvalReport, dict]:
    """Execute the pipeline and return (patch-level report, artifact paths)."""

    def log(stage):
        if progress is not None:
            progress(stage)

    os.makedirs(config.out_dir, exist_ok=True)
    rows = load_manifest(config.manifest)
    if any(not r.split for r in rows):
        rows = split_manifest(rows, config.split_seed)
    devices = manifest_devices(rows)
    if len(devices) < 2:
        raise DataError(f"classification needs >= 2 devices, got {devices}")

    log("prnu-audit")
    audit = prnu_free_audit(
        rows, config.manifest, config.mode, config.sampling_seed,
        n_audit=config.audit_images, n_ref=config.audit_ref_images,
    )

    log("patches")
    patch_dir = os.path.join(config.out_dir, "patches")
    index = generate_patches(
        rows, config.manifest, patch_dir, config.mode,
        config.patches_per_image, config.sampling_seed, manip=config.manip,
    )
    train_rows = [r for r in index if r.split == "train"]
    test_rows = [r for r in index if r.split == "test"]
    leakage = assert_no_leakage(train_rows, test_rows)

    log("train")
    nn_cfg = MiniResNetConfig(
        num_classes=len(devices),
        stem_channels=config.stem_channels,
        stage_channels=config.stage_channels,
        blocks_per_stage=config.blocks_per_stage,
    )
    model = MiniResNet(nn_cfg, seed=config.model_seed)
    train_ds = PatchFileDataset(train_rows, patch_dir, devices)
    losses = train(model, train_ds, config.train)
    model_dir = os.path.join(config.out_dir, "model")
    save_model(model, model_dir)

    log("features")
    test_ds = PatchFileDataset(test_rows, patch_dir, devices)
    train_feats = compute_features(model, train_ds)
    test_feats = compute_features(model, test_ds)
    train_csv = os.path.join(config.out_dir, "features_train.csv")
    test_csv = os.path.join(config.out_dir, "features_test.csv")
    _write_features_csv(train_csv, train_rows, train_feats)
    _write_features_csv(test_csv, test_rows, test_feats)

    log("svm")
    svm_model = svm_train(
        train_feats,
        [r.device_id for r in train_rows],
        C=config.svm_c,
        gamma=config.svm_gamma,
        seed=config.svm_seed,
    )
    svm_dir = os.path.join(config.out_dir, "svm")
    save_svm(svm_model, svm_dir)

    log("evaluate")
    predictions = svm_predict_batch(svm_model, test_feats)
    patch_pairs = [(r.device_id, p) for r, p in zip(test_rows, predictions)]
    report = evaluate(patch_pairs, classes=devices, metadata={"level": "patch"})
    image_pairs = majority_vote(
        (r.source_image_id, r.device_id, p) for r, p in zip(test_rows, predictions)
    )
    image_report = evaluate(image_pairs, classes=devices, metadata={"level": "image"})

    artifacts = {
        "patch_index": "patches/index.jsonl",
        "model": "model",
        "svm": "svm",
        "train_features": "features_train.csv",
        "test_features": "features_test.csv",
        "report": "report.json",
    }
    full_report = {
        "mode": config.mode,
        "config": config.to_dict(),
        "dataset": {
            "n_rows": len(rows),
            "devices": devices,
            "n_train_patches": len(train_rows),
            "n_test_patches": len(test_rows),
        },
        "prnu_audit": audit,
        "leakage": leakage,
        "loss_curve": [float(v) for v in losses],
        "patch_level": report.to_dict(),
        "image_level": image_report.to_dict(),
        "artifacts": artifacts,
    }
    report_path = os.path.join(config.out_dir, "report.json")
    with open(report_path, "w") as fh:
        json.dump(full_report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return report, artifacts
