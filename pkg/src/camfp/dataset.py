"""Dataset manifests, train/test splitting, and patch persistence.

A manifest is a JSON-lines file of {path, device_id, model_id, scene_kind,
split} rows; paths are relative to the manifest's directory. Patch sets
persist as one CFTR tensor file per patch plus a JSON-lines index.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict, replace

import numpy as np

from . import cftensor
from .errors import DataError, SplitError
from .imgcore import Image, load_image
from .sampling import Patch

TRAIN_FRACTION = 0.75


@dataclass(frozen=True)
class ManifestRow:
    path: str
    device_id: str
    model_id: str = ""
    scene_kind: str = ""
    split: str = ""  # train | test | "" (unsplit)


def save_manifest(rows, path) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(asdict(row), sort_keys=True) + "\n")


def load_manifest(path, check_files: bool = True) -> list[ManifestRow]:
    root = os.path.dirname(os.path.abspath(path))
    rows = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            rows.append(ManifestRow(**d))
    if check_files:
        for row in rows:
            if not os.path.exists(os.path.join(root, row.path)):
                raise DataError(f"manifest row points at missing file: {row.path}")
    return rows


def manifest_devices(rows) -> list[str]:
    return sorted({row.device_id for row in rows})


def load_row_image(row: ManifestRow, manifest_path) -> Image:
    root = os.path.dirname(os.path.abspath(manifest_path))
    return load_image(os.path.join(root, row.path))


def split_manifest(rows, seed: int) -> list[ManifestRow]:
    """Per-device uniform 75/25 image-level split."""
    by_device: dict[str, list[int]] = {}
    for i, row in enumerate(rows):
        by_device.setdefault(row.device_id, []).append(i)
    out = list(rows)
    for device_id in sorted(by_device):
        idxs = by_device[device_id]
        n = len(idxs)
        if n < 4:
            raise SplitError(f"device {device_id} has {n} images; need >= 4 for a 75/25 split")
        n_train = min(int(round(TRAIN_FRACTION * n)), n - 1)
        # Device-keyed stream so adding a device never reshuffles the others.
        rng = np.random.Generator(np.random.Philox(_device_split_seed(seed, device_id)))
        perm = rng.permutation(n)
        train_set = {idxs[j] for j in perm[:n_train]}
        for j in idxs:
            out[j] = replace(rows[j], split="train" if j in train_set else "test")
    return out


def _device_split_seed(seed: int, device_id: str) -> int:
    from .sampling import derive_seed

    return derive_seed("split", seed, device_id)


# --- patch persistence ----------------------------------------------------

@dataclass(frozen=True)
class PatchIndexRow:
    patch_file: str
    device_id: str
    source_image_id: str
    mode: str
    patch_index: int
    seed: int
    split: str


def write_patch(patch: Patch, split: str, out_dir, counter: int) -> PatchIndexRow:
    name = f"patch_{counter:06d}.cft"
    cftensor.write_tensor(os.path.join(out_dir, name), patch.data.astype(np.float32))
    return PatchIndexRow(
        patch_file=name,
        device_id=patch.device_id,
        source_image_id=patch.source_image_id,
        mode=patch.mode,
        patch_index=patch.patch_index,
        seed=int(patch.seed),
        split=split,
    )


def save_patch_index(rows, path) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(asdict(row), sort_keys=True) + "\n")


def load_patch_index(path) -> list[PatchIndexRow]:
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rows.append(PatchIndexRow(**json.loads(line)))
    return rows


class PatchFileDataset:
    """Indexable (CHW float32, label) view over persisted patches."""

    def __init__(self, index_rows, root, classes):
        self.rows = list(index_rows)
        self.root = root
        self.classes = list(classes)
        self._label_of = {c: i for i, c in enumerate(self.classes)}
        for row in self.rows:
            if row.device_id not in self._label_of:
                raise DataError(f"patch row {row.patch_file}: unknown device {row.device_id}")

    def __len__(self) -> int:
        return len(self.rows)

    def label(self, i: int) -> int:
        return self._label_of[self.rows[i].device_id]

    def __getitem__(self, i: int):
        row = self.rows[i]
        data = cftensor.read_tensor(os.path.join(self.root, row.patch_file))
        return np.ascontiguousarray(data.transpose(2, 0, 1)), self._label_of[row.device_id]


def assert_no_leakage(train_rows, test_rows) -> dict:
    """No test source image may contribute any training patch."""
    train_images = {r.source_image_id for r in train_rows}
    test_images = {r.source_image_id for r in test_rows}
    overlap = sorted(train_images & test_images)
    if overlap:
        raise DataError(f"train/test leakage: shared source images {overlap[:5]}")
    return {
        "n_train_images": len(train_images),
        "n_test_images": len(test_images),
        "overlap": 0,
    }
