"""Synthetic patch-pair datasets with rare-change imbalance.

A dataset is a list of samples, each a feature vector plus a ground-truth
change label in {-1, +1}.  The generator mimics the statistics of the kind
of change-detection corpus this engine targets: a large multi-modal
no-change class and a small, localized change class (default 39 positives
out of 2200).  In 16-dimensional mode every sample also carries a pair of
30x30 grayscale patches, and the features are 4x4 block means of the
absolute pixel difference, so the annotation UI can show real image pairs
whose feature vectors are exactly reconstructible from the pixels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .rng import make_rng

PATCH_SIZE = 30
# Block edges partitioning 30 rows/cols into a 4x4 grid (sizes 8, 8, 7, 7).
BLOCK_EDGES = (0, 8, 16, 23, 30)

NEGATIVE_NOISE_LEVELS = (3.0, 8.0, 15.0)
SQUARE_SIZE = 14
SQUARE_BRIGHTNESS = 140.0


class DatasetFormatError(ValueError):
    """Raised when persisted dataset files are malformed or inconsistent."""


@dataclass
class Sample:
    id: int
    features: np.ndarray
    label: int
    pixels_before: Optional[np.ndarray] = None
    pixels_after: Optional[np.ndarray] = None


@dataclass
class Dataset:
    name: str
    samples: list[Sample]
    dim: int
    _features: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _labels: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.samples)

    def feature_matrix(self) -> np.ndarray:
        """All features as an (n, dim) float64 array, row i = sample id i."""
        if self._features is None:
            self._features = np.stack([s.features for s in self.samples])
        return self._features

    def label_vector(self) -> np.ndarray:
        """Ground-truth labels as an (n,) int array indexed by id."""
        if self._labels is None:
            self._labels = np.array([s.label for s in self.samples], dtype=np.int64)
        return self._labels

    def has_pixels(self) -> bool:
        return self.samples[0].pixels_before is not None if self.samples else False

    def equals(self, other: "Dataset") -> bool:
        """Field-for-field equality, including pixel grids when present."""
        if self.name != other.name or self.dim != other.dim or self.n != other.n:
            return False
        for a, b in zip(self.samples, other.samples):
            if a.id != b.id or a.label != b.label:
                return False
            if not np.array_equal(a.features, b.features):
                return False
            for pa, pb in ((a.pixels_before, b.pixels_before), (a.pixels_after, b.pixels_after)):
                if (pa is None) != (pb is None):
                    return False
                if pa is not None and not np.array_equal(pa, pb):
                    return False
        return True


@dataclass(frozen=True)
class Split:
    train_ids: tuple[int, ...]
    eval_ids: tuple[int, ...]


def block_mean_features(before: np.ndarray, after: np.ndarray) -> np.ndarray:
    """4x4 block means of |after - before| over a 30x30 patch pair."""
    diff = np.abs(after.astype(np.float64) - before.astype(np.float64))
    feats = np.empty(16, dtype=np.float64)
    idx = 0
    for r in range(4):
        for c in range(4):
            block = diff[BLOCK_EDGES[r]:BLOCK_EDGES[r + 1], BLOCK_EDGES[c]:BLOCK_EDGES[c + 1]]
            feats[idx] = block.mean()
            idx += 1
    return feats


def _pixel_pair(rng: np.random.Generator, positive: bool) -> tuple[np.ndarray, np.ndarray]:
    """One aligned patch pair: same scene, independent acquisition noise.

    Negatives vary only by noise (three amplitude regimes give three feature
    modes); positives additionally get a bright square inserted into the
    second patch, covering the central feature blocks.
    """
    base = rng.integers(40, 161, size=(PATCH_SIZE, PATCH_SIZE)).astype(np.float64)
    if positive:
        sigma = NEGATIVE_NOISE_LEVELS[1]
    else:
        sigma = NEGATIVE_NOISE_LEVELS[rng.integers(0, len(NEGATIVE_NOISE_LEVELS))]
    before = base + rng.normal(0.0, sigma, size=base.shape)
    after = base + rng.normal(0.0, sigma, size=base.shape)
    if positive:
        top, left = rng.integers(8, 11, size=2)
        after[top:top + SQUARE_SIZE, left:left + SQUARE_SIZE] += SQUARE_BRIGHTNESS
    before = np.clip(np.rint(before), 0, 255).astype(np.uint8)
    after = np.clip(np.rint(after), 0, 255).astype(np.uint8)
    return before, after


def generate_synthetic(n: int, dim: int, pos_fraction: float, seed: int) -> Dataset:
    """Generate a deterministic imbalanced dataset.

    Exactly round(n * pos_fraction) samples are positive, scattered over the
    id range.  Negatives come from three feature-space modes; positives sit
    in a distinct low-density region far from all of them.  With dim == 16
    every sample carries a 30x30 patch pair and features are the 4x4 block
    means of the absolute pixel difference.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 4):
        raise ValueError(f"n must be an integer >= 4, got {n!r}")
    if not (isinstance(dim, (int, np.integer)) and dim >= 2):
        raise ValueError(f"dim must be an integer >= 2, got {dim!r}")
    if not (math.isfinite(pos_fraction) and 0.0 < pos_fraction < 1.0):
        raise ValueError(f"pos_fraction must be a finite value in (0, 1), got {pos_fraction!r}")
    n_pos = round(n * pos_fraction)
    if n_pos == 0:
        raise ValueError(f"pos_fraction {pos_fraction} rounds to zero positives for n={n}")
    if n_pos == n:
        raise ValueError(f"pos_fraction {pos_fraction} rounds to zero negatives for n={n}")

    rng = make_rng("dataset", n, dim, repr(float(pos_fraction)), seed)
    positive = np.zeros(n, dtype=bool)
    positive[rng.permutation(n)[:n_pos]] = True

    samples: list[Sample] = []
    if dim == 16:
        for i in range(n):
            before, after = _pixel_pair(rng, bool(positive[i]))
            feats = block_mean_features(before, after)
            samples.append(Sample(
                id=i,
                features=feats,
                label=1 if positive[i] else -1,
                pixels_before=before,
                pixels_after=after,
            ))
    else:
        n_modes = 3
        centers = rng.normal(size=(n_modes, dim))
        centers *= 8.0 / np.linalg.norm(centers, axis=1, keepdims=True)
        pos_center = rng.normal(size=dim)
        pos_center *= 20.0 / np.linalg.norm(pos_center)
        for i in range(n):
            if positive[i]:
                feats = pos_center + 0.5 * rng.normal(size=dim)
            else:
                mode = rng.integers(0, n_modes)
                feats = centers[mode] + rng.normal(size=dim)
            samples.append(Sample(id=i, features=feats, label=1 if positive[i] else -1))

    name = f"synthetic-n{n}-d{dim}-s{seed}"
    return Dataset(name=name, samples=samples, dim=dim)


def split_half(ds: Dataset, seed: int) -> Split:
    """Stratified 50/50 split: positive counts per half differ by at most 1."""
    if ds.n < 2:
        raise ValueError("dataset must contain at least 2 samples to split")
    labels = ds.label_vector()
    pos_ids = np.flatnonzero(labels == 1)
    neg_ids = np.flatnonzero(labels == -1)
    rng = make_rng("split", ds.name, seed)
    pos_ids = rng.permutation(pos_ids)
    neg_ids = rng.permutation(neg_ids)
    n_train = ds.n // 2
    train_pos = len(pos_ids) // 2
    train_neg = n_train - train_pos
    train = np.concatenate([pos_ids[:train_pos], neg_ids[:train_neg]])
    eval_ = np.concatenate([pos_ids[train_pos:], neg_ids[train_neg:]])
    return Split(
        train_ids=tuple(int(i) for i in np.sort(train)),
        eval_ids=tuple(int(i) for i in np.sort(eval_)),
    )


# --- persistence -----------------------------------------------------------

def _write_pgm(path: Path, grid: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii"))
        fh.write(grid.astype(np.uint8).tobytes())


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # Header: magic, width, height, maxval as whitespace-separated tokens.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    if tokens[0] != b"P5":
        raise DatasetFormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise DatasetFormatError(f"{path}: expected maxval 255, got {maxval}")
    body = data[pos:pos + width * height]
    if len(body) != width * height:
        raise DatasetFormatError(f"{path}: truncated pixel payload")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)


def save(ds: Dataset, path) -> None:
    """Write manifest.json, features.csv, labels.csv (and pixels/) under path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": ds.name,
        "n": ds.n,
        "dim": ds.dim,
        "features_file": "features.csv",
        "labels_file": "labels.csv",
    }
    if ds.has_pixels():
        manifest["pixels_dir"] = "pixels"
        pixdir = root / "pixels"
        pixdir.mkdir(exist_ok=True)
        for s in ds.samples:
            _write_pgm(pixdir / f"{s.id}_a.pgm", s.pixels_before)
            _write_pgm(pixdir / f"{s.id}_b.pgm", s.pixels_after)
    with open(root / "features.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id," + ",".join(f"f{j}" for j in range(ds.dim)) + "\n")
        for s in ds.samples:
            fh.write(str(s.id) + "," + ",".join(f"{v:.17g}" for v in s.features) + "\n")
    with open(root / "labels.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,label\n")
        for s in ds.samples:
            fh.write(f"{s.id},{s.label}\n")
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load(path) -> Dataset:
    """Load a dataset saved by :func:`save`, validating every record."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetFormatError(f"missing manifest: {manifest_path}")
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"malformed manifest {manifest_path}: {exc}")
    for key in ("name", "n", "dim", "features_file", "labels_file"):
        if key not in manifest:
            raise DatasetFormatError(f"manifest missing required key {key!r}")
    n, dim = manifest["n"], manifest["dim"]

    features: dict[int, np.ndarray] = {}
    with open(root / manifest["features_file"], encoding="utf-8") as fh:
        header = fh.readline().strip()
        expected = "id," + ",".join(f"f{j}" for j in range(dim))
        if header != expected:
            raise DatasetFormatError(f"features header mismatch: got {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            sid = int(parts[0])
            if len(parts) - 1 != dim:
                raise DatasetFormatError(
                    f"feature row id={sid} has {len(parts) - 1} values, expected dim={dim}")
            if sid in features:
                raise DatasetFormatError(f"duplicate id {sid} in features file")
            features[sid] = np.array([float(v) for v in parts[1:]], dtype=np.float64)

    labels: dict[int, int] = {}
    with open(root / manifest["labels_file"], encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "id,label":
            raise DatasetFormatError(f"labels header mismatch: got {header!r}")
        for line in fh:
            sid_str, label_str = line.strip().split(",")
            sid, label = int(sid_str), int(label_str)
            if label not in (-1, 1):
                raise DatasetFormatError(f"label must be -1 or +1 (id={sid}, got {label})")
            if sid in labels:
                raise DatasetFormatError(f"duplicate id {sid} in labels file")
            labels[sid] = label

    if set(features) != set(labels):
        raise DatasetFormatError("features and labels files cover different id sets")
    if set(features) != set(range(n)):
        raise DatasetFormatError(f"ids must be contiguous 0..{n - 1}")

    pixdir = root / manifest["pixels_dir"] if "pixels_dir" in manifest else None
    samples = []
    for sid in range(n):
        before = after = None
        if pixdir is not None:
            before = _read_pgm(pixdir / f"{sid}_a.pgm")
            after = _read_pgm(pixdir / f"{sid}_b.pgm")
            if before.shape != (PATCH_SIZE, PATCH_SIZE) or after.shape != (PATCH_SIZE, PATCH_SIZE):
                raise DatasetFormatError(f"pixel grids for id={sid} are not 30x30")
        samples.append(Sample(id=sid, features=features[sid], label=labels[sid],
                              pixels_before=before, pixels_after=after))
    return Dataset(name=manifest["name"], samples=samples, dim=dim)
