"""Dataset ingestion: CIFAR binary batches, channel normalization,
deterministic stratified subsetting, and a synthetic frequency-pattern
dataset for fast tests.

Images are (32, 32, 3) float tensors indexed (row, col, channel).  CIFAR
pixel bytes are channel-planar (1024 R, 1024 G, 1024 B) and row-major
within a channel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

__all__ = [
    "CIFAR_MEANS", "CIFAR_STDS", "Dataset",
    "load_cifar", "normalize", "denormalize",
    "subset", "subset_indices", "synth_dataset", "nearest_template_accuracy",
    "export_indices", "import_indices",
]

# Per-channel normalization constants for CIFAR (R, G, B).
CIFAR_MEANS = np.array([0.4914, 0.4822, 0.4465])
CIFAR_STDS = np.array([0.2023, 0.1994, 0.2010])

_CIFAR_FILES = {
    ("cifar10", "train"): [f"data_batch_{i}.bin" for i in range(1, 6)],
    ("cifar10", "test"): ["test_batch.bin"],
    ("cifar100", "train"): ["train.bin"],
    ("cifar100", "test"): ["test.bin"],
}


@dataclass
class Dataset:
    images: np.ndarray  # (N, 32, 32, 3) or (N, m, n, 3)
    labels: np.ndarray  # (N,) int
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels differ in length")
        if len(self.labels) and int(self.labels.max()) >= self.num_classes:
            raise ValueError("label exceeds num_classes")

    def __len__(self):
        return len(self.labels)


def normalize(img, means=CIFAR_MEANS, stds=CIFAR_STDS):
    """Per-channel (x - mean) / std."""
    means = np.asarray(means, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    if np.any(stds <= 0):
        raise ValueError("stds must be strictly positive")
    return (np.asarray(img, dtype=np.float64) - means) / stds


def denormalize(img, means=CIFAR_MEANS, stds=CIFAR_STDS):
    return np.asarray(img, dtype=np.float64) * np.asarray(stds) + np.asarray(means)


def _parse_records(raw: bytes, label_bytes: int, fname: str):
    rec = label_bytes + 3072
    if len(raw) == 0 or len(raw) % rec != 0:
        raise FormatError(
            f"{fname}: length {len(raw)} is not a multiple of record size {rec}"
        )
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(-1, rec)
    labels = arr[:, label_bytes - 1].astype(np.int64)  # fine label for cifar100
    pixels = arr[:, label_bytes:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return pixels, labels


def load_cifar(data_dir, flavor: str = "cifar10", split: str = "train",
               means=CIFAR_MEANS, stds=CIFAR_STDS) -> Dataset:
    """Load canonical CIFAR binary batch files, scale to [0,1], normalize."""
    try:
        files = _CIFAR_FILES[(flavor, split)]
    except KeyError:
        raise ValueError(f"unknown flavor/split {flavor!r}/{split!r}") from None
    label_bytes = 1 if flavor == "cifar10" else 2
    all_pixels, all_labels = [], []
    for fname in files:
        path = os.path.join(data_dir, fname)
        with open(path, "rb") as fh:
            raw = fh.read()
        pixels, labels = _parse_records(raw, label_bytes, fname)
        all_pixels.append(pixels)
        all_labels.append(labels)
    pixels = np.concatenate(all_pixels)
    labels = np.concatenate(all_labels)
    images = normalize(pixels.astype(np.float64) / 255.0, means, stds)
    return Dataset(images=images, labels=labels,
                   num_classes=10 if flavor == "cifar10" else 100, split=split)


def subset_indices(d: Dataset, k: int, seed: int = 0) -> np.ndarray:
    """Index set of a deterministic stratified sample (counts differ by <= 1)."""
    if k > len(d):
        raise ValueError(f"subset size {k} exceeds dataset size {len(d)}")
    if k < d.num_classes:
        raise ValueError(f"subset size {k} cannot stratify {d.num_classes} classes")
    rng = np.random.default_rng(seed)
    base, extra = divmod(k, d.num_classes)
    # classes receiving one extra sample are drawn without replacement
    bonus = set(rng.choice(d.num_classes, size=extra, replace=False).tolist())
    picked = []
    for cls in range(d.num_classes):
        idx = np.flatnonzero(d.labels == cls)
        take = base + (1 if cls in bonus else 0)
        picked.append(rng.permutation(idx)[:take])
    return rng.permutation(np.concatenate(picked))


def subset(d: Dataset, k: int, seed: int = 0) -> Dataset:
    """Deterministic stratified sample of k items from d."""
    order = subset_indices(d, k, seed)
    return Dataset(images=d.images[order], labels=d.labels[order],
                   num_classes=d.num_classes, split=d.split)


def _templates(num_classes: int, m: int, n: int) -> np.ndarray:
    """Fixed per-class templates from orthogonal cosine frequency patterns."""
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    out = np.empty((num_classes, m, n, 3))
    for k in range(num_classes):
        f = k + 1
        pattern = np.cos(2 * np.pi * f * i / m) * np.cos(2 * np.pi * f * j / n)
        out[k] = pattern[..., None]
    return out


def synth_dataset(num_classes: int, per_class: int, dim=(8, 8), seed: int = 0,
                  sigma: float = 0.25, split: str = "train") -> Dataset:
    """Gaussian noise around fixed frequency templates; separable at sigma=0.25."""
    m, n = dim
    if m != n:
        raise ValueError("synthetic images must be square")
    if num_classes < 2:
        raise ValueError("need at least two classes")
    rng = np.random.default_rng(seed)
    tpl = _templates(num_classes, m, n)
    labels = np.tile(np.arange(num_classes), per_class)
    noise = rng.normal(0.0, sigma, size=(len(labels), m, n, 3))
    images = tpl[labels] + noise
    return Dataset(images=images, labels=labels,
                   num_classes=num_classes, split=split)


def nearest_template_accuracy(d: Dataset) -> float:
    """Oracle classifier: nearest class template in Euclidean distance."""
    m, n = d.images.shape[1:3]
    tpl = _templates(d.num_classes, m, n).reshape(d.num_classes, -1)
    flat = d.images.reshape(len(d), -1)
    d2 = ((flat[:, None, :] - tpl[None]) ** 2).sum(axis=2)
    return float(np.mean(d2.argmin(axis=1) == d.labels))


def export_indices(indices, path):
    with open(path, "w") as fh:
        for i in indices:
            fh.write(f"{int(i)}\n")


def import_indices(path):
    with open(path) as fh:
        return np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
