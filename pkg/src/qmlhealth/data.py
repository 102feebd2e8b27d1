"""Tabular CSV and image-tree loaders, balanced sampling and angle scaling."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (CsvParseError, ImageDecodeError, LayoutError, SchemaError,
                     ValidationError)

DEFAULT_LABEL_COLUMN = "HeartDiseaseorAttack"
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".pgm", ".ppm"}
SPLITS = ("train", "test")


@dataclass
class TabularDataset:
    X: np.ndarray
    y: np.ndarray  # 0/1
    feature_names: list[str]
    label_column: str = DEFAULT_LABEL_COLUMN
    row_ids: np.ndarray | None = None  # original row positions

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {self.X.shape}")
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValidationError(f"{self.X.shape[0]} feature rows but {self.y.shape[0]} labels")
        if self.y.size and not np.isin(self.y, (0, 1)).all():
            raise ValidationError("labels must be 0 or 1")
        if self.row_ids is None:
            self.row_ids = np.arange(self.y.size)

    def __len__(self):
        return self.y.size

    def class_counts(self) -> tuple[int, int]:
        return int((self.y == 0).sum()), int((self.y == 1).sum())

    def subset(self, idx) -> "TabularDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx], row_ids=self.row_ids[idx])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(self.y.tobytes())
        return h.hexdigest()


def load_csv(path, label_column: str = DEFAULT_LABEL_COLUMN) -> TabularDataset:
    """Parse a header-row CSV; every column except ``label_column`` is a feature."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: empty file (no header row)")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise SchemaError(f"{path}: label column {label_column!r} not found; columns are {header}")
        li = header.index(label_column)
        feature_names = [h for k, h in enumerate(header) if k != li]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise CsvParseError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}",
                                    row=lineno)
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                col = next(k for k, v in enumerate(row) if not _is_float(v))
                raise CsvParseError(
                    f"{path}:{lineno}: cannot parse {row[col]!r} in column {header[col]!r}",
                    row=lineno, column=header[col]) from None
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    labels = data[:, li]
    if not np.isin(labels, (0.0, 1.0)).all():
        bad = labels[~np.isin(labels, (0.0, 1.0))][0]
        raise SchemaError(f"{path}: label column {label_column!r} must hold 0/1, found {bad}")
    X = np.delete(data, li, axis=1)
    return TabularDataset(X, labels.astype(np.int64), feature_names, label_column)


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def balanced_sample(ds: TabularDataset, per_class: int, seed: int):
    """Draw ``per_class`` rows per class without replacement.

    Returns ``(sample, remainder)``; sample rows are ordered by class, then by
    original position.
    """
    if per_class < 0:
        raise ValidationError(f"per_class must be >= 0, got {per_class}")
    counts = ds.class_counts()
    if min(counts) < per_class:
        raise ValidationError(
            f"need {per_class} rows per class but classes have {counts[0]} / {counts[1]}")
    rng = np.random.default_rng(seed)
    chosen = []
    for label in (0, 1):
        pool = np.flatnonzero(ds.y == label)
        chosen.append(np.sort(rng.choice(pool, size=per_class, replace=False)))
    chosen = np.concatenate(chosen)
    mask = np.ones(len(ds), dtype=bool)
    mask[chosen] = False
    return ds.subset(chosen), ds.subset(np.flatnonzero(mask))


@dataclass
class Scaler:
    """Min-max map of each feature onto [0, pi], clipping outside the fitted range."""

    minimum: np.ndarray
    maximum: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.maximum - self.minimum
        const = span <= 0
        safe = np.where(const, 1.0, span)
        clipped = np.clip(X, self.minimum, self.maximum)
        out = math.pi * (clipped - self.minimum) / safe
        out[..., const] = math.pi / 2
        return np.clip(out, 0.0, math.pi)

    def as_dict(self) -> dict:
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}


def fit_scaler(train: TabularDataset | np.ndarray) -> Scaler:
    X = train.X if isinstance(train, TabularDataset) else np.asarray(train, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("cannot fit a scaler on empty data")
    return Scaler(X.min(axis=0), X.max(axis=0))


def apply_scaler(scaler: Scaler, ds: TabularDataset) -> TabularDataset:
    return replace(ds, X=scaler.transform(ds.X))


# --------------------------------------------------------------------------
# images
# --------------------------------------------------------------------------


@dataclass
class ImageDataset:
    images: np.ndarray  # (n, r, r) in [0, 1]
    labels: np.ndarray
    class_names: tuple[str, ...]
    paths: list[str] = field(default_factory=list)

    def __len__(self):
        return self.labels.size

    @property
    def resolution(self) -> int:
        return self.images.shape[1]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.images).tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()


def _max_pixel_value(img: Image.Image) -> float:
    if img.mode in ("I;16", "I;16B", "I;16L", "I;16N"):
        return 65535.0
    if img.mode == "I":
        return 65535.0
    if img.mode == "F":
        return 1.0
    return 255.0


def image_to_gray(img: Image.Image) -> np.ndarray:
    """Grayscale float array in [0, 1]: unweighted mean of colour channels."""
    if img.mode in ("P", "1", "CMYK", "YCbCr", "LAB", "HSV"):
        img = img.convert("RGB")
    if img.mode in ("RGBA", "LA", "PA"):
        img = img.convert("RGB" if img.mode != "LA" else "L")
    scale = _max_pixel_value(img)
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    return np.clip(arr / scale, 0.0, 1.0)


def box_downsample(gray: np.ndarray, resolution: int) -> np.ndarray:
    """Area-average resample to ``resolution x resolution``."""
    if gray.shape == (resolution, resolution):
        return gray.copy()
    src = Image.fromarray(gray.astype(np.float32))
    out = src.resize((resolution, resolution), resample=Image.BOX)
    return np.clip(np.asarray(out, dtype=np.float64), 0.0, 1.0)


def load_image_file(path, resolution: int) -> np.ndarray:
    try:
        with Image.open(path) as img:
            img.load()
            gray = image_to_gray(img)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(path, exc) from None
    return box_downsample(gray, resolution)


def _proportional_counts(counts, cap):
    """Split ``cap`` across classes proportionally (largest remainder)."""
    total = sum(counts)
    if cap >= total:
        return list(counts)
    raw = [c * cap / total for c in counts]
    out = [int(math.floor(r)) for r in raw]
    order = sorted(range(len(counts)), key=lambda k: (-(raw[k] - out[k]), k))
    for k in order[: cap - sum(out)]:
        out[k] += 1
    return out


def discover_classes(root) -> tuple[str, ...]:
    root = Path(root)
    if not (root / "train").is_dir():
        raise LayoutError(f"{root}: missing split folder 'train'")
    names = tuple(sorted(p.name for p in (root / "train").iterdir() if p.is_dir()))
    if len(names) != 2:
        raise LayoutError(f"{root / 'train'}: expected two class folders, found {list(names)}")
    return names


def load_images(root, resolution: int = 28, train_cap: int | None = None,
                test_cap: int | None = None, seed: int = 0) -> tuple[ImageDataset, ImageDataset]:
    """Load ``root/{train,test}/{class}/*`` into two datasets.

    Class labels follow the sorted folder names (first -> 0).  Caps subsample
    each split uniformly per class, keeping class proportions.
    """
    if resolution < 1:
        raise ValidationError(f"resolution must be >= 1, got {resolution}")
    root = Path(root)
    classes = discover_classes(root)
    rng = np.random.default_rng(seed)
    out = []
    for split, cap in zip(SPLITS, (train_cap, test_cap)):
        per_class_files = []
        for name in classes:
            folder = root / split / name
            if not folder.is_dir():
                raise LayoutError(f"{root}: missing folder {split}/{name}")
            files = sorted(p for p in folder.iterdir()
                           if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
            per_class_files.append(files)
        counts = [len(f) for f in per_class_files]
        keep = _proportional_counts(counts, sum(counts) if cap is None else cap)
        images, labels, paths = [], [], []
        for label, (files, k) in enumerate(zip(per_class_files, keep)):
            if k < len(files):
                idx = np.sort(rng.choice(len(files), size=k, replace=False))
                files = [files[i] for i in idx]
            for p in files:
                images.append(load_image_file(p, resolution))
                labels.append(label)
                paths.append(str(p))
        arr = np.stack(images) if images else np.zeros((0, resolution, resolution))
        out.append(ImageDataset(arr, np.array(labels, dtype=np.int64), classes, paths))
    return out[0], out[1]


def synthetic_blobs(n_train: int = 40, n_test: int = 20, resolution: int = 28,
                    seed: int = 7) -> tuple[ImageDataset, ImageDataset]:
    """Two-class toy corpus: dark centre blob (label 0) vs light centre blob (label 1).

    Blob centres jitter by up to 3 pixels and pixel noise is added; classes
    alternate so both splits stay balanced.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:resolution, 0:resolution].astype(np.float64)

    def make(n):
        images = np.empty((n, resolution, resolution))
        labels = np.arange(n) % 2
        for k in range(n):
            cy, cx = (resolution - 1) / 2 + rng.uniform(-3, 3, size=2)
            sigma = resolution * rng.uniform(0.12, 0.2)
            blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
            base = rng.uniform(0.35, 0.65)
            amp = rng.uniform(0.25, 0.35) * (1 if labels[k] else -1)
            img = base + amp * blob + rng.normal(0, 0.05, size=blob.shape)
            images[k] = np.clip(img, 0.0, 1.0)
        return ImageDataset(images, labels.astype(np.int64), ("dark_center", "light_center"))

    return make(n_train), make(n_test)


def write_image_tree(root, train: ImageDataset, test: ImageDataset) -> Path:
    """Save datasets as 8-bit PNGs in the ``root/{train,test}/{class}/`` layout."""
    root = Path(root)
    for split, ds in zip(SPLITS, (train, test)):
        for name in ds.class_names:
            (root / split / name).mkdir(parents=True, exist_ok=True)
        for k, (img, label) in enumerate(zip(ds.images, ds.labels)):
            pixels = np.round(np.clip(img, 0, 1) * 255).astype(np.uint8)
            Image.fromarray(pixels).save(root / split / ds.class_names[label] / f"{k:04d}.png")
    return root
