"""MNIST-style IDX ingestion, class subsets, and feature pooling."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


class DataError(ValueError):
    """Raised for malformed data files or invalid preprocessing requests."""


@dataclass(frozen=True)
class RawImage:
    """One grayscale image with its digit label."""

    pixels: np.ndarray  # (rows, cols) uint8
    label: int

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.uint8)
        object.__setattr__(self, "pixels", pixels)
        if pixels.ndim != 2:
            raise DataError("pixels must be a 2-D grid")
        if not 0 <= self.label <= 9:
            raise DataError(f"label out of range: {self.label}")


@dataclass(frozen=True)
class DatasetSplit:
    """Preprocessed train/test samples over a fixed digit set."""

    train: tuple  # of (np.ndarray features, label)
    test: tuple
    class_labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        for _, label in self.train + self.test:
            if label not in self.class_labels:
                raise DataError(f"label {label} outside class set")


def _read_be32(f) -> int:
    data = f.read(4)
    if len(data) != 4:
        raise DataError("truncated header")
    return struct.unpack(">i", data)[0]


def load_idx(images_path: str | Path, labels_path: str | Path) -> list[RawImage]:
    """Parse a big-endian IDX image/label file pair."""
    with open(images_path, "rb") as f:
        magic = _read_be32(f)
        if magic != IMAGE_MAGIC:
            raise DataError(f"bad image magic {magic}, expected {IMAGE_MAGIC}")
        count, rows, cols = _read_be32(f), _read_be32(f), _read_be32(f)
        raw = f.read(count * rows * cols)
        if len(raw) != count * rows * cols:
            raise DataError("truncated image data")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)
    with open(labels_path, "rb") as f:
        magic = _read_be32(f)
        if magic != LABEL_MAGIC:
            raise DataError(f"bad label magic {magic}, expected {LABEL_MAGIC}")
        label_count = _read_be32(f)
        raw = f.read(label_count)
        if len(raw) != label_count:
            raise DataError("truncated label data")
        labels = np.frombuffer(raw, dtype=np.uint8)
    if count != label_count:
        raise DataError(f"image count {count} != label count {label_count}")
    return [RawImage(pixels=img, label=int(lab)) for img, lab in zip(images, labels)]


def write_idx(images: np.ndarray, labels: np.ndarray,
              images_path: str | Path, labels_path: str | Path) -> None:
    """Write an IDX image/label pair (the inverse of load_idx)."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    count, rows, cols = images.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">iiii", IMAGE_MAGIC, count, rows, cols))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">ii", LABEL_MAGIC, len(labels)))
        f.write(labels.tobytes())


def _pool_regions(shape: tuple[int, int], d: int) -> list[tuple[slice, slice]]:
    """Tile the image into d regions: vertical strips, or a grid for 4/6."""
    rows, cols = shape
    if d == 4:
        row_edges, col_edges = [0, rows // 2, rows], [0, cols // 2, cols]
    elif d == 6:
        # 2x3 grid; 28 columns split as (10, 9, 9)
        thirds = [0, (cols + 2) // 3, (cols + 2) // 3 + (cols - (cols + 2) // 3 + 1) // 2, cols]
        row_edges, col_edges = [0, rows // 2, rows], thirds
    else:
        if d < 1 or d > cols:
            raise DataError(f"unsupported feature count {d}")
        edges = np.linspace(0, cols, d + 1).round().astype(int)
        row_edges, col_edges = [0, rows], list(edges)
    return [
        (slice(row_edges[i], row_edges[i + 1]), slice(col_edges[j], col_edges[j + 1]))
        for i in range(len(row_edges) - 1)
        for j in range(len(col_edges) - 1)
    ]


def preprocess(image: RawImage, d: int) -> np.ndarray:
    """Average-pool the image into d regions and scale into [0, 1]."""
    regions = _pool_regions(image.pixels.shape, d)
    values = np.array([float(image.pixels[r].mean()) for r in regions]) / 255.0
    return np.clip(values, 0.0, 1.0)


def build_subset(images, digits, n_train: int, n_test: int, seed: int,
                 n_features: int = 4) -> DatasetSplit:
    """Seeded, class-balanced train/test split over the requested digits."""
    digits = tuple(digits)
    rng = np.random.default_rng(seed)
    by_digit = {dig: [] for dig in digits}
    for idx, img in enumerate(images):
        if img.label in by_digit:
            by_digit[img.label].append(idx)

    def quotas(total: int) -> list[int]:
        base, extra = divmod(total, len(digits))
        return [base + (1 if i < extra else 0) for i in range(len(digits))]

    train_quota, test_quota = quotas(n_train), quotas(n_test)
    train_idx, test_idx = [], []
    for dig, want_train, want_test in zip(digits, train_quota, test_quota):
        pool = by_digit[dig]
        if len(pool) < want_train + want_test:
            raise DataError(
                f"not enough images of digit {dig}: "
                f"{len(pool)} < {want_train + want_test}"
            )
        picked = rng.choice(len(pool), size=want_train + want_test, replace=False)
        train_idx.extend(pool[i] for i in picked[:want_train])
        test_idx.extend(pool[i] for i in picked[want_train:])

    def pack(indices):
        return tuple(
            (preprocess(images[i], n_features), images[i].label) for i in indices
        )

    return DatasetSplit(train=pack(train_idx), test=pack(test_idx),
                        class_labels=digits)


def save_split(split: DatasetSplit, path: str | Path, seed: int | None = None) -> None:
    """Persist a split; feature doubles survive the round trip bit-exactly."""
    payload = {
        "class_labels": list(split.class_labels),
        "seed": seed,
        "train": [[list(map(float, f)), int(y)] for f, y in split.train],
        "test": [[list(map(float, f)), int(y)] for f, y in split.test],
    }
    Path(path).write_text(json.dumps(payload))


def load_split(path: str | Path) -> DatasetSplit:
    payload = json.loads(Path(path).read_text())
    unpack = lambda rows: tuple((np.array(f, dtype=float), y) for f, y in rows)
    return DatasetSplit(
        train=unpack(payload["train"]),
        test=unpack(payload["test"]),
        class_labels=tuple(payload["class_labels"]),
    )
