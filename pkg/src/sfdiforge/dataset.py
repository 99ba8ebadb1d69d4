"""Pairing, splitting, and composite export for training datasets.

A training composite is a 512x256 RGB image: the structured-illumination
input occupies columns 0-255 and the ground-truth map columns 256-511 (the
ordering is recorded in the dataset manifest so a consumer can swap halves).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sfdiforge import imageio
from sfdiforge.scene import SceneError
from sfdiforge.sweep import MANIFEST_NAME, _manifest_rows

DATASET_MANIFEST = "dataset.jsonl"


def pair(input_image: np.ndarray, gt_image: np.ndarray) -> np.ndarray:
    """Concatenate input (left) and ground truth (right) into one composite."""
    a = np.asarray(input_image)
    b = np.asarray(gt_image)
    if a.shape != b.shape:
        raise SceneError(f"pair dimension mismatch: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=1)


def unpair(composite: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of pair; bit-exact round trip."""
    c = np.asarray(composite)
    if c.shape[1] % 2 != 0:
        raise SceneError(f"composite width {c.shape[1]} is not even")
    half = c.shape[1] // 2
    return c[:, :half].copy(), c[:, half:].copy()


def drop_blue(image: np.ndarray) -> np.ndarray:
    """Zero the blue plane, leaving red/green untouched. Idempotent."""
    out = np.asarray(image).copy()
    out[..., 2] = 0
    return out


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    seed: int

    def validate(self) -> None:
        if set(self.train) & set(self.val):
            raise SceneError("train/val overlap")


def split(ids, counts: tuple[int, int], seed: int) -> DatasetSplit:
    """Uniform random (train, val) partition, reproducible from the seed."""
    ids = list(ids)
    n_train, n_val = counts
    if n_train + n_val > len(ids):
        raise SceneError(
            f"split counts {counts} exceed dataset size {len(ids)}"
        )
    order = np.random.default_rng(seed).permutation(len(ids))
    train = tuple(ids[i] for i in order[:n_train])
    val = tuple(ids[i] for i in order[n_train : n_train + n_val])
    return DatasetSplit(train=train, val=val, seed=seed)


# ---------------------------------------------------------------------------
# Building composite train/val directories from sweep output
# ---------------------------------------------------------------------------
def collect_pairs(pairs_dirs) -> list[dict]:
    """Gather frame pairs from one or more sweep output directories.

    Each directory must contain the sweep manifest; rows are returned with
    absolute paths and a unique id "<dirname>/<frame>".
    """
    rows = []
    for d in map(Path, pairs_dirs):
        manifest = d / MANIFEST_NAME
        if not manifest.exists():
            raise SceneError(f"{d}: no {MANIFEST_NAME}; not a sweep output directory")
        for frame, row in sorted(_manifest_rows(manifest).items()):
            rows.append(
                {
                    "id": f"{d.name}/{frame:05d}",
                    "input": str(d / row["input"]),
                    "gt": str(d / row["gt"]),
                    "frame": frame,
                    "params": row.get("params", {}),
                    "seed": row.get("seed"),
                }
            )
    if not rows:
        raise SceneError("no frame pairs found")
    return rows


def build_composites(
    pairs_dirs,
    out_dir,
    counts: tuple[int, int],
    seed: int,
    *,
    remove_blue: bool = False,
    swap_halves: bool = False,
) -> dict:
    """Write train/ and val/ composite PNGs plus the dataset manifest."""
    rows = collect_pairs(pairs_dirs)
    ds_split = split([r["id"] for r in rows], counts, seed)
    by_id = {r["id"]: r for r in rows}
    out = Path(out_dir)
    manifest_rows = []
    for subset, members in (("train", ds_split.train), ("val", ds_split.val)):
        for i, pid in enumerate(members):
            row = by_id[pid]
            left = imageio.load_png(row["input"])
            right = imageio.load_png(row["gt"])
            if remove_blue:
                left = drop_blue(left)
            comp = pair(right, left) if swap_halves else pair(left, right)
            rel = f"{subset}/frame_{i:05d}.png"
            imageio.save_png(out / rel, comp)
            manifest_rows.append(
                {
                    "id": pid,
                    "file": rel,
                    "split": subset,
                    "source_input": row["input"],
                    "source_gt": row["gt"],
                }
            )
    header = {
        "split_seed": seed,
        "counts": {"train": counts[0], "val": counts[1]},
        "convention": "right=ground_truth" if not swap_halves else "left=ground_truth",
        "blue_removed": remove_blue,
    }
    with open(out / DATASET_MANIFEST, "w") as fh:
        fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for r in manifest_rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return {"header": header, "rows": manifest_rows, "split": ds_split}


def read_dataset_manifest(dataset_dir) -> tuple[dict, list[dict]]:
    path = Path(dataset_dir) / DATASET_MANIFEST
    if not path.exists():
        raise SceneError(f"{dataset_dir}: missing {DATASET_MANIFEST}")
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "header" in rec:
                header = rec["header"]
            else:
                rows.append(rec)
    return header, rows


def import_composites(src_dir, *, expect_width: int = 512) -> list[Path]:
    """Validate externally supplied composites (e.g. an experimental set)."""
    files = sorted(Path(src_dir).glob("*.png"))
    if not files:
        raise SceneError(f"{src_dir}: no composite PNGs found")
    for f in files:
        img = imageio.load_png(f)
        if img.shape[1] != expect_width:
            raise SceneError(f"{f}: width {img.shape[1]}, expected {expect_width}")
    return files
