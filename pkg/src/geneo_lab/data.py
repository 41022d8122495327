"""MNIST IDX loading, stratified splits and image rescaling."""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
DATA_ENV = "GENEO_LAB_DATA"
DEFAULT_DATA_DIR = Path("/root/data/mnist")

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


class IdxFormatError(ValueError):
    pass


def _read_bytes(path) -> bytes:
    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path, expected_magic: int) -> np.ndarray:
    buf = _read_bytes(path)
    if len(buf) < 8:
        raise IdxFormatError(f"{path}: file too short for an IDX header")
    magic, = struct.unpack(">I", buf[:4])
    if magic != expected_magic:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise IdxFormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", buf[4:header])
    size = int(np.prod(dims))
    if len(buf) - header < size:
        raise IdxFormatError(f"{path}: truncated payload ({len(buf) - header} of {size} bytes)")
    return np.frombuffer(buf, dtype=np.uint8, count=size, offset=header).reshape(dims)


def write_idx(path, array: np.ndarray):
    """Write a uint8 array as IDX (1-D labels or 3-D images)."""
    a = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x800 | a.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{a.ndim}I", *a.shape))
        fh.write(a.tobytes())


@dataclass
class ImageDataset:
    """Grayscale images kept as raw bytes; ``images`` gives them rescaled to [0, 1]."""

    raw: np.ndarray        # (n, h, w) uint8
    labels: np.ndarray     # (n,) int64

    def __post_init__(self):
        if len(self.raw) != len(self.labels):
            raise IdxFormatError(f"{len(self.raw)} images but {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)

    @property
    def shape(self) -> tuple:
        return tuple(self.raw.shape[1:])

    @cached_property
    def images(self) -> np.ndarray:
        return self.raw.astype(np.float32) / np.float32(255.0)

    def subset(self, idx) -> "ImageDataset":
        idx = np.asarray(idx)
        return ImageDataset(self.raw[idx], self.labels[idx])


def load_mnist(image_file, label_file) -> ImageDataset:
    raw = read_idx(image_file, IMAGE_MAGIC)
    if raw.ndim != 3:
        raise IdxFormatError(f"{image_file}: expected 3 dimensions, got {raw.ndim}")
    labels = read_idx(label_file, LABEL_MAGIC)
    if labels.ndim != 1:
        raise IdxFormatError(f"{label_file}: expected 1 dimension, got {labels.ndim}")
    if len(labels) != len(raw):
        raise IdxFormatError(f"count mismatch: {len(raw)} images, {len(labels)} labels")
    return ImageDataset(raw, labels.astype(np.int64))


def resolve_data_dir(path=None) -> Path:
    """Explicit path, else ``$GENEO_LAB_DATA``, else the default location."""
    for cand in (path, os.environ.get(DATA_ENV), DEFAULT_DATA_DIR):
        if cand:
            return Path(cand)
    return DEFAULT_DATA_DIR


def _find(d: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        p = d / name
        if p.exists():
            return p
    raise FileNotFoundError(f"{stem} not found in {d}")


def mnist_available(path=None) -> bool:
    d = resolve_data_dir(path)
    try:
        for stem in MNIST_FILES.values():
            _find(d, stem)
    except FileNotFoundError:
        return False
    return True


def load_mnist_dir(path=None) -> ImageDataset:
    """All 70,000 MNIST images (the 60k train file followed by the 10k test file)."""
    d = resolve_data_dir(path)
    tr = load_mnist(_find(d, MNIST_FILES["train_images"]), _find(d, MNIST_FILES["train_labels"]))
    te = load_mnist(_find(d, MNIST_FILES["test_images"]), _find(d, MNIST_FILES["test_labels"]))
    return ImageDataset(np.concatenate([tr.raw, te.raw]), np.concatenate([tr.labels, te.labels]))


# --------------------------------------------------------------------------- splits

@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def sizes(self) -> tuple:
        return len(self.train), len(self.val), len(self.test)


def stratified_split(labels, seed: int, fractions=(0.6, 0.2, 0.2), min_per_class: int = 10) -> Split:
    """Disjoint per-class 60/20/20 split; each part sorted by index."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for c in np.unique(labels):
        idx = np.nonzero(labels == c)[0]
        if len(idx) < min_per_class:
            raise ValueError(f"class {c} has only {len(idx)} examples (need {min_per_class})")
        idx = rng.permutation(idx)
        n_tr = int(round(fractions[0] * len(idx)))
        n_va = int(round(fractions[1] * len(idx)))
        parts[0].append(idx[:n_tr])
        parts[1].append(idx[n_tr:n_tr + n_va])
        parts[2].append(idx[n_tr + n_va:])
    return Split(*(np.sort(np.concatenate(p)) for p in parts))


def stratified_subset(indices, labels, n: int, seed: int) -> np.ndarray:
    """``n`` of ``indices`` chosen class-proportionally (largest remainder), sorted."""
    indices = np.asarray(indices)
    if n >= len(indices):
        return np.sort(indices)
    lab = np.asarray(labels)[indices]
    classes, counts = np.unique(lab, return_counts=True)
    exact = counts * n / len(indices)
    take = np.floor(exact).astype(int)
    order = np.argsort(-(exact - take), kind="stable")
    take[order[: n - take.sum()]] += 1
    rng = np.random.default_rng(seed)
    out = [rng.choice(indices[lab == c], size=k, replace=False) for c, k in zip(classes, take)]
    return np.sort(np.concatenate(out))


# --------------------------------------------------------------------------- rescaling

def downscale_2x2_max(img: np.ndarray) -> np.ndarray:
    """Max over disjoint 2×2 blocks of the last two axes."""
    img = np.asarray(img)
    h, w = img.shape[-2:]
    if h % 2 or w % 2:
        raise ValueError(f"2x2 downscaling needs even dimensions, got {h}x{w}")
    return img.reshape(*img.shape[:-2], h // 2, 2, w // 2, 2).max(axis=(-3, -1))


def upsample_nearest(img: np.ndarray) -> np.ndarray:
    """Each pixel repeated into a 2×2 block."""
    img = np.asarray(img)
    return np.repeat(np.repeat(img, 2, axis=-2), 2, axis=-1)
