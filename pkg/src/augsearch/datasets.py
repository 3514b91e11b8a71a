"""Dataset ingestion and generation.

Supports the CIFAR-10 binary record format (1 label byte followed by a
3072-byte channel-planar 32x32 RGB image), a plain image-directory format
(image files plus a ``manifest.txt`` of "relative-path label" lines),
uniform sub-sampling for reduced-set experiments, per-channel
standardization, and a synthetic glyph benchmark whose validation/test
splits break canonical-only training by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import image as img_ops
from .rng import stream_rng

__all__ = [
    "LabeledDataset",
    "ChannelStats",
    "load_cifar10_binary",
    "save_cifar10_binary",
    "load_image_directory",
    "reduce_dataset",
    "synth_invariance",
    "compute_channel_stats",
    "standardize_images",
]

CIFAR_RECORD_BYTES = 3073
CIFAR_IMAGE_BYTES = 3072


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, H, W, 3) uint8
    labels: np.ndarray  # (N,) int64
    num_classes: int

    def __post_init__(self) -> None:
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4 or self.images.shape[3] != 3:
            raise ValueError(f"expected (N, H, W, 3) images, got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels length mismatch")
        if len(self.labels) and self.labels.max() >= self.num_classes:
            raise ValueError("label exceeds class count")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class ChannelStats:
    mean: np.ndarray  # (3,)
    std: np.ndarray  # (3,), strictly positive


def _cifar_files(path) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.bin"))
        if not files:
            raise FileNotFoundError(f"no .bin files under {p}")
        return files
    return [p]


def load_cifar10_binary(path) -> LabeledDataset:
    """Load CIFAR-10 binary records from a file or a directory of .bin files."""
    images = []
    labels = []
    for f in _cifar_files(path):
        raw = np.fromfile(f, dtype=np.uint8)
        if raw.size == 0 or raw.size % CIFAR_RECORD_BYTES != 0:
            raise ValueError(
                f"{f}: size {raw.size} is not a multiple of {CIFAR_RECORD_BYTES}-byte records"
            )
        recs = raw.reshape(-1, CIFAR_RECORD_BYTES)
        lab = recs[:, 0].astype(np.int64)
        if lab.max() > 9:
            raise ValueError(f"{f}: label byte > 9")
        planar = recs[:, 1:].reshape(-1, 3, 32, 32)
        images.append(planar.transpose(0, 2, 3, 1))
        labels.append(lab)
    return LabeledDataset(np.concatenate(images), np.concatenate(labels), 10)


def save_cifar10_binary(ds: LabeledDataset, path) -> None:
    if ds.images.shape[1:] != (32, 32, 3):
        raise ValueError("CIFAR binary format requires 32x32x3 images")
    recs = np.empty((len(ds), CIFAR_RECORD_BYTES), dtype=np.uint8)
    recs[:, 0] = ds.labels
    recs[:, 1:] = ds.images.transpose(0, 3, 1, 2).reshape(len(ds), CIFAR_IMAGE_BYTES)
    recs.tofile(path)


def load_image_directory(root) -> LabeledDataset:
    """Load images listed in ``root/manifest.txt`` ("relpath label" lines)."""
    from PIL import Image

    root = Path(root)
    manifest = root / "manifest.txt"
    if not manifest.exists():
        raise FileNotFoundError(f"missing manifest: {manifest}")
    images = []
    labels = []
    for lineno, line in enumerate(manifest.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rel, lab = line.rsplit(maxsplit=1)
            labels.append(int(lab))
        except ValueError as exc:
            raise ValueError(f"{manifest}:{lineno}: malformed manifest line {line!r}") from exc
        with Image.open(root / rel) as im:
            images.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
    if not images:
        raise ValueError(f"{manifest}: empty manifest")
    labels_arr = np.asarray(labels, dtype=np.int64)
    return LabeledDataset(np.stack(images), labels_arr, int(labels_arr.max()) + 1)


def reduce_dataset(d: LabeledDataset, n: int, seed: int) -> LabeledDataset:
    """Uniform sample of n examples without replacement."""
    if n > len(d):
        raise ValueError(f"cannot sample {n} from {len(d)} examples")
    idx = stream_rng(seed, 0).choice(len(d), size=n, replace=False)
    return LabeledDataset(d.images[idx], d.labels[idx], d.num_classes)


def compute_channel_stats(d: LabeledDataset) -> ChannelStats:
    if len(d) == 0:
        raise ValueError("cannot compute stats on an empty dataset")
    flat = d.images.reshape(-1, 3).astype(np.float64)
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    degenerate = std <= 0
    if degenerate.any():
        import warnings

        warnings.warn("constant channel: std replaced by 1", stacklevel=2)
        std = np.where(degenerate, 1.0, std)
    return ChannelStats(mean=mean, std=std)


def standardize_images(images: np.ndarray, stats: ChannelStats) -> np.ndarray:
    return ((images.astype(np.float32) - stats.mean.astype(np.float32))
            / stats.std.astype(np.float32))


# ---------------------------------------------------------------------------
# synthetic invariance benchmark

_INVARIANCES = ("invert", "shear", "rotate")


def _class_patterns(seed: int, num_classes: int, cells: int = 8) -> np.ndarray:
    pats = []
    for c in range(num_classes):
        rng = stream_rng(seed, 10_000 + c)
        pats.append(rng.choice([-1.0, 1.0], size=(cells, cells)))
    return np.stack(pats)


def _render_sample(pattern: np.ndarray, rng, size: int) -> np.ndarray:
    scale = size // pattern.shape[0]
    amp = rng.uniform(60.0, 100.0)
    base = 128.0 + amp * np.kron(pattern, np.ones((scale, scale)))
    img = base[:, :, None] + rng.normal(0.0, 20.0, size=(size, size, 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _apply_invariances(img: np.ndarray, rng, invariances) -> np.ndarray:
    out = img
    if "invert" in invariances and rng.random() < 0.5:
        out = img_ops.invert(out)
    if "shear" in invariances:
        out = img_ops.shear_x(out, float(rng.uniform(-0.3, 0.3)))
    if "rotate" in invariances:
        out = img_ops.rotate(out, float(rng.uniform(-30.0, 30.0)))
    return out


def synth_invariance(
    n: int,
    seed: int,
    invariances=("invert",),
    num_classes: int = 10,
    image_size: int = 32,
    n_val: int | None = None,
    n_test: int | None = None,
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Glyph-pattern classification where val/test apply the chosen
    invariances at random while training images stay canonical, so a model
    trained without matching augmentation generalizes poorly by design.
    """
    if n < 100:
        raise ValueError("need n >= 100 training examples")
    unknown = set(invariances) - set(_INVARIANCES)
    if unknown:
        raise ValueError(f"unknown invariances {sorted(unknown)}; choose from {_INVARIANCES}")
    n_val = n_val if n_val is not None else max(100, n // 2)
    n_test = n_test if n_test is not None else max(100, n // 2)
    patterns = _class_patterns(seed, num_classes)

    def build(count: int, stream_base: int, transformed: bool) -> LabeledDataset:
        images = np.empty((count, image_size, image_size, 3), dtype=np.uint8)
        labels = np.arange(count, dtype=np.int64) % num_classes
        for i in range(count):
            rng = stream_rng(seed, stream_base + i)
            img = _render_sample(patterns[labels[i]], rng, image_size)
            if transformed:
                img = _apply_invariances(img, rng, invariances)
            images[i] = img
        return LabeledDataset(images, labels, num_classes)

    train = build(n, 1_000_000, transformed=False)
    val = build(n_val, 2_000_000, transformed=True)
    test = build(n_test, 3_000_000, transformed=True)
    return train, val, test
