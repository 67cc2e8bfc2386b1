"""Command-line interface.

Subcommands cover every pipeline stage (simulate, fingerprint-build, pce,
patches, train, features, svm-train, classify, evaluate, manip, embed) plus
`run`, which executes a whole experiment from one JSON config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .dataset import (
    PatchFileDataset,
    load_manifest,
    load_patch_index,
    load_row_image,
    manifest_devices,
)
from .errors import CamfpError
from .experiment import (
    ExperimentConfig,
    config_from_dict,
    generate_patches,
    read_features_csv,
    compute_features,
    run_experiment,
)
from .imgcore import load_image, save_image
from .manip import ManipSpec, apply as apply_manip
from .metrics import evaluate, majority_vote, pca_embed
from .nn import MiniResNet, MiniResNetConfig, TrainConfig, load_model, save_model, train
from .prnu import (
    build_reference,
    extract_residual,
    load_fingerprint,
    pce,
    pce_pipeline_downsampled,
    save_fingerprint,
)
from .simcam import simulate_dataset
from .svm import load_svm, save_svm, svm_predict_batch, svm_train


def _cmd_simulate(args):
    rows = simulate_dataset(
        args.out,
        n_models=args.models,
        devices_per_model=args.devices_per_model,
        images_per_device=args.images_per_device,
        jpeg_q=args.jpeg_q,
        seed=args.seed,
        resolution=(args.resolution, args.resolution),
        prnu_strength=args.prnu_strength,
        tone_jitter=args.tone_jitter,
    )
    print(f"wrote {len(rows)} images + manifest to {args.out}")
    return 0


def _cmd_fingerprint_build(args):
    rows = load_manifest(args.manifest)
    rows = [r for r in rows if r.device_id == args.device]
    if args.kind == "flat":
        rows = [r for r in rows if r.scene_kind == "flatfield"]
    if args.split:
        rows = [r for r in rows if r.split == args.split]
    rows = rows[: args.images]
    if not rows:
        print(f"no images for device {args.device}", file=sys.stderr)
        return 1
    residuals = [
        extract_residual(load_row_image(r, args.manifest), image_id=r.path) for r in rows
    ]
    ref = build_reference(residuals, args.device, kind=args.kind)
    save_fingerprint(ref, args.out)
    print(f"fingerprint for {args.device} from {len(rows)} images -> {args.out}")
    return 0


def _cmd_pce(args):
    img = load_image(args.image)
    ref = load_fingerprint(args.fingerprint)
    if args.via_downsample:
        report = pce_pipeline_downsampled(img, ref)
    else:
        residual = extract_residual(img)
        report = pce(residual, ref)
    print(json.dumps({
        "pce": report.pce,
        "peak_location": list(report.peak_location),
        "decision": report.decision,
        "threshold": report.threshold,
    }, sort_keys=True))
    return 0


def _cmd_patches(args):
    rows = load_manifest(args.manifest)
    index = generate_patches(
        rows, args.manifest, args.out, args.mode, args.patches_per_image,
        args.seed, workers=args.workers,
    )
    print(f"wrote {len(index)} patches to {args.out}")
    return 0


def _cmd_train(args):
    index = load_patch_index(os.path.join(args.patches, "index.jsonl"))
    train_rows = [r for r in index if r.split == "train"] or index
    classes = sorted({r.device_id for r in index})
    cfg = MiniResNetConfig(
        num_classes=len(classes),
        stem_channels=args.stem_channels,
        stage_channels=tuple(args.stage_channels),
        blocks_per_stage=args.blocks_per_stage,
    )
    model = MiniResNet(cfg, seed=args.model_seed)
    ds = PatchFileDataset(train_rows, args.patches, classes)
    tc = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                     learning_rate=args.lr, seed=args.seed)
    losses = train(model, ds, tc, progress=lambda e, l: print(f"epoch {e}: loss {l:.4f}"))
    save_model(model, args.out)
    with open(os.path.join(args.out, "classes.json"), "w") as fh:
        json.dump(classes, fh)
        fh.write("\n")
    print(f"trained {tc.epochs} epochs; final loss {losses[-1]:.4f}; model -> {args.out}")
    return 0


def _cmd_features(args):
    model = load_model(args.model)
    index = load_patch_index(os.path.join(args.patches, "index.jsonl"))
    if args.split != "all":
        index = [r for r in index if r.split == args.split]
    classes = sorted({r.device_id for r in index})
    ds = PatchFileDataset(index, args.patches, classes)
    feats = compute_features(model, ds)
    from .experiment import _write_features_csv

    _write_features_csv(args.out, index, feats)
    print(f"wrote {feats.shape[0]} x {feats.shape[1]} features -> {args.out}")
    return 0


def _cmd_svm_train(args):
    device_ids, _, feats = read_features_csv(args.features)
    gamma = "auto" if args.gamma == "auto" else float(args.gamma)
    model = svm_train(feats, device_ids, C=args.C, gamma=gamma, seed=args.seed)
    save_svm(model, args.out)
    print(f"SVM over {len(model.classes)} classes (gamma={model.gamma:.6g}) -> {args.out}")
    return 0


def _cmd_classify(args):
    model = load_svm(args.svm)
    device_ids, image_ids, feats = read_features_csv(args.features)
    preds = svm_predict_batch(model, feats)
    with open(args.out, "w") as fh:
        fh.write("device_id,source_image_id,predicted\n")
        for d, i, p in zip(device_ids, image_ids, preds):
            fh.write(f"{d},{i},{p}\n")
    print(f"classified {len(preds)} patches -> {args.out}")
    return 0


def _cmd_evaluate(args):
    pairs, groups = [], []
    with open(args.predictions) as fh:
        header = fh.readline().rstrip("\n").split(",")
        for line in fh:
            d, i, p = line.rstrip("\n").split(",")
            pairs.append((d, p))
            groups.append((i, d, p))
    report = evaluate(pairs, metadata={"level": "patch"})
    image_report = evaluate(majority_vote(groups), metadata={"level": "image"})
    payload = {"patch_level": report.to_dict(), "image_level": image_report.to_dict()}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    print(f"patch accuracy {report.accuracy:.2f}% | image accuracy {image_report.accuracy:.2f}%")
    return 0


def _manip_spec(op: str, param: float) -> ManipSpec:
    if op == "gamma":
        return ManipSpec("gamma", gamma=float(param))
    if op == "rotate":
        return ManipSpec("rotate", angle=float(param))
    return ManipSpec("jpeg", quality=int(param))


def _cmd_manip(args):
    spec = _manip_spec(args.op, args.param)
    if os.path.isdir(args.infile):
        os.makedirs(args.out, exist_ok=True)
        names = sorted(
            n for n in os.listdir(args.infile) if n.lower().endswith((".png", ".ppm", ".jpg", ".jpeg"))
        )
        for name in names:
            img = load_image(os.path.join(args.infile, name))
            out_name = os.path.splitext(name)[0] + ".png"
            save_image(apply_manip(img, spec), os.path.join(args.out, out_name))
        print(f"processed {len(names)} images -> {args.out}")
    else:
        img = load_image(args.infile)
        save_image(apply_manip(img, spec), args.out)
        print(f"{args.infile} -> {args.out}")
    return 0


def _cmd_embed(args):
    device_ids, image_ids, feats = read_features_csv(args.features)
    points, degenerate = pca_embed(feats, dims=args.dims)
    with open(args.out, "w") as fh:
        fh.write("device_id,source_image_id," + ",".join(f"p{i}" for i in range(args.dims)) + "\n")
        for d, i, row in zip(device_ids, image_ids, points):
            fh.write(f"{d},{i}," + ",".join(repr(float(v)) for v in row) + "\n")
    if degenerate:
        print("warning: degenerate feature matrix; embedded points are zeros", file=sys.stderr)
    print(f"embedded {points.shape[0]} points -> {args.out}")
    return 0


def _cmd_run(args):
    cfg_dict = {}
    if args.config:
        with open(args.config) as fh:
            cfg_dict = json.load(fh)
    manifest = args.manifest or cfg_dict.pop("manifest", None)
    out_dir = args.out or cfg_dict.pop("out_dir", None)
    if not manifest or not out_dir:
        print("run needs --manifest and --out (or both in the config JSON)", file=sys.stderr)
        return 2
    cfg_dict.pop("manifest", None)
    cfg_dict.pop("out_dir", None)
    overrides = {
        "mode": args.mode,
        "patches_per_image": args.patches_per_image,
        "sampling_seed": args.sampling_seed,
        "model_seed": args.model_seed,
        "split_seed": args.split_seed,
        "svm_c": args.svm_c,
        "svm_gamma": args.svm_gamma,
        "svm_seed": args.svm_seed,
    }
    for key, val in overrides.items():
        if val is not None:
            cfg_dict[key] = val
    train_d = dict(cfg_dict.get("train", {}))
    for key, val in (("epochs", args.epochs), ("batch_size", args.batch_size),
                     ("learning_rate", args.lr), ("seed", args.train_seed)):
        if val is not None:
            train_d[key] = val
    if train_d:
        cfg_dict["train"] = train_d
    if args.manip_op is not None:
        from dataclasses import asdict
        cfg_dict["manip"] = asdict(_manip_spec(args.manip_op, args.manip_param))
    config = config_from_dict(cfg_dict, manifest=manifest, out_dir=out_dir)
    report, artifacts = run_experiment(config, progress=lambda s: print(f"[{s}]"))
    print(f"patch accuracy {report.accuracy:.2f}% | report -> {os.path.join(out_dir, 'report.json')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camfp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"camfp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic labeled dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--models", type=int, default=3)
    p.add_argument("--devices-per-model", type=int, default=2)
    p.add_argument("--images-per-device", type=int, default=40)
    p.add_argument("--jpeg-q", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=896)
    p.add_argument("--prnu-strength", type=float, default=0.002)
    p.add_argument("--tone-jitter", type=float, default=1.35)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fingerprint-build", help="average residuals into a device fingerprint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--device", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["natural", "flat"], default="natural")
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--split", choices=["train", "test"], default=None)
    p.set_defaults(func=_cmd_fingerprint_build)

    p = sub.add_parser("pce", help="peak-to-correlation energy of an image vs a fingerprint")
    p.add_argument("--image", required=True)
    p.add_argument("--fingerprint", required=True)
    p.add_argument("--via-downsample", action="store_true",
                   help="push the image through the down/up-sampling removal path first")
    p.set_defaults(func=_cmd_pce)

    p = sub.add_parser("patches", help="form PRNU-free patches from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["down", "random_orig", "random_down"], default="down")
    p.add_argument("--patches-per-image", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(func=_cmd_patches)

    p = sub.add_parser("train", help="train the residual network on patches")
    p.add_argument("--patches", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=12)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-seed", type=int, default=0)
    p.add_argument("--stem-channels", type=int, default=16)
    p.add_argument("--stage-channels", type=int, nargs="+", default=[16, 32, 64])
    p.add_argument("--blocks-per-stage", type=int, default=2)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("features", help="extract GAP fingerprint vectors")
    p.add_argument("--model", required=True)
    p.add_argument("--patches", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["train", "test", "all"], default="all")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("svm-train", help="train the RBF-SVM on features")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_svm_train)

    p = sub.add_parser("classify", help="predict devices for feature vectors")
    p.add_argument("--svm", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="accuracy + confusion from predictions CSV")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("manip", help="apply gamma/rotate/jpeg to a file or directory")
    p.add_argument("--op", choices=["gamma", "rotate", "jpeg"], required=True)
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_manip)

    p = sub.add_parser("embed", help="PCA 2-D embedding of a features CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=int, default=2)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("run", help="full experiment from a JSON config")
    p.add_argument("--config", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--mode", choices=["down", "random_orig", "random_down"], default=None)
    p.add_argument("--patches-per-image", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--train-seed", type=int, default=None)
    p.add_argument("--sampling-seed", type=int, default=None)
    p.add_argument("--model-seed", type=int, default=None)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--svm-c", type=float, default=None)
    p.add_argument("--svm-gamma", default=None)
    p.add_argument("--svm-seed", type=int, default=None)
    p.add_argument("--manip-op", choices=["gamma", "rotate", "jpeg"], default=None)
    p.add_argument("--manip-param", type=float, default=None)
    p.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CamfpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
