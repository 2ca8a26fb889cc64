"""Datasets, one-hot labels, CSV/IDX ingestion and a Gaussian-mixture generator."""

from __future__ import annotations

import csv
import enum
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

# Substream offsets under a single user seed. Kept fixed so that generated
# data never changes between releases.
CLASS_STREAM = 0
FEATURE_STREAM = 1
MEANS_STREAM = 2


class Provenance(str, enum.Enum):
    CLEAN = "clean"
    NOISY = "noisy"


def substream(seed: int, offset: int) -> np.random.Generator:
    """Independent generator derived from ``seed`` and a fixed stream offset."""
    check_seed(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(offset,)))


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < 2**64:
        raise ValidationError(f"seed must fit in 64 unsigned bits, got {seed}")
    return int(seed)


def encode_one_hot(class_index: int, c: int) -> np.ndarray:
    if c < 1:
        raise ValidationError(f"class count must be positive, got {c}")
    if not 0 <= class_index < c:
        raise IndexError(f"class index {class_index} outside [0, {c})")
    y = np.zeros(c, dtype=np.int8)
    y[class_index] = 1
    return y


def one_hot_matrix(classes, c: int) -> np.ndarray:
    classes = np.asarray(classes)
    if classes.size and (classes.min() < 0 or classes.max() >= c):
        bad = int(classes[(classes < 0) | (classes >= c)][0])
        raise IndexError(f"class index {bad} outside [0, {c})")
    y = np.zeros((classes.shape[0], c), dtype=np.int8)
    y[np.arange(classes.shape[0]), classes] = 1
    return y


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix (n x d) with one-hot labels (n x c).

    Arrays are copied and made read-only on construction, so a dataset can
    be shared freely between threads.
    """

    features: np.ndarray
    labels: np.ndarray
    provenance: Provenance = Provenance.CLEAN
    class_count: int = field(default=None)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        c = labels.shape[1] if labels.ndim == 2 else None
        if self.class_count is not None and c is not None and c != self.class_count:
            raise ValidationError(f"labels have {c} columns but class_count={self.class_count}")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int8)))
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        object.__setattr__(self, "class_count", c)
        validate_dataset(self)

    @classmethod
    def from_classes(cls, features, classes, c: int, provenance=Provenance.CLEAN) -> "Dataset":
        return cls(features, one_hot_matrix(classes, c), provenance)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        return self.class_count

    @property
    def classes(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)

    def with_labels(self, labels, provenance) -> "Dataset":
        return Dataset(self.features, labels, provenance)

    def subset(self, index) -> "Dataset":
        return Dataset(self.features[index], self.labels[index], self.provenance)

    def digest(self) -> str:
        """SHA-256 over shape, features and labels; used to prove a split was untouched."""
        h = hashlib.sha256()
        h.update(struct.pack("<3q", self.n, self.d, self.c))
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.provenance == other.provenance
            and self.features.shape == other.features.shape
            and self.labels.shape == other.labels.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def validate_dataset(ds: Dataset) -> None:
    x, y = ds.features, ds.labels
    if x.ndim != 2 or y.ndim != 2:
        raise ValidationError("features and labels must be 2-D")
    n, d = x.shape
    if n < 1 or d < 1:
        raise ValidationError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if y.shape[0] != n:
        raise ValidationError(f"{n} feature rows but {y.shape[0]} label rows")
    if y.shape[1] < 2:
        raise ValidationError(f"need at least 2 classes, got {y.shape[1]}")
    if not np.isfinite(x).all():
        raise ValidationError("features contain non-finite values")
    if not (((y == 0) | (y == 1)).all() and (y.sum(axis=1) == 1).all()):
        raise ValidationError("every label row must be one-hot")


def standardize(train: Dataset, *others: Dataset) -> tuple[Dataset, ...]:
    """Zero-mean, unit-variance features using statistics of ``train`` only.

    Constant columns are centred but left unscaled.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std[std == 0] = 1.0
    return tuple(
        Dataset((ds.features - mean) / std, ds.labels, ds.provenance) for ds in (train, *others)
    )


# -- synthetic data ---------------------------------------------------------


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Isotropic Gaussian classes sharing one standard deviation."""

    means: np.ndarray
    sigma: float
    weights: np.ndarray
    seed: int = 0

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] < 2 or means.shape[1] < 1:
            raise ValidationError("means must be a (c >= 2) x (d >= 1) array")
        if not np.isfinite(means).all():
            raise ValidationError("means must be finite")
        if weights.shape != (means.shape[0],):
            raise ValidationError(f"expected {means.shape[0]} weights, got shape {weights.shape}")
        if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to 1")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        check_seed(self.seed)
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def class_count(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def mixture_spec(c: int, d: int, sigma: float = 1.0, seed: int = 0, separation: float = 3.0,
                 weights=None) -> GaussianMixtureSpec:
    """Mixture whose class means are random directions of norm ``separation``."""
    if c < 2 or d < 1:
        raise ValidationError(f"need c >= 2 and d >= 1, got c={c}, d={d}")
    rng = substream(seed, MEANS_STREAM)
    means = rng.standard_normal((c, d))
    means *= separation / np.linalg.norm(means, axis=1, keepdims=True)
    if weights is None:
        weights = np.full(c, 1.0 / c)
    return GaussianMixtureSpec(means, sigma, weights, seed)


def gen_gaussian_mixture(spec: GaussianMixtureSpec, n: int) -> Dataset:
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    classes = substream(spec.seed, CLASS_STREAM).choice(spec.class_count, size=n, p=spec.weights)
    noise = substream(spec.seed, FEATURE_STREAM).standard_normal((n, spec.dim))
    features = spec.means[classes] + spec.sigma * noise
    return Dataset.from_classes(features, classes, spec.class_count)


# -- CSV --------------------------------------------------------------------


def save_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"f{k}" for k in range(ds.d)] + ["label"])
        for x, k in zip(ds.features, ds.classes):
            w.writerow([repr(float(v)) for v in x] + [int(k)])


def load_csv(path, c: int | None = None, provenance=Provenance.CLEAN) -> Dataset:
    """Read a CSV written by :func:`save_csv`.

    When ``c`` is omitted the class count is ``max(label) + 1`` (at least 2).
    """
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise FormatError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[-1] != "label":
        raise FormatError(f"{path}: row 1: missing header row ending in a 'label' column, got {rows[0]}")
    d = len(header) - 1
    body = [r for r in rows[1:] if r]
    if not body:
        raise FormatError(f"{path}: no data rows")

    features = np.empty((len(body), d))
    classes = np.empty(len(body), dtype=np.int64)
    for i, row in enumerate(body, start=2):
        if len(row) != d + 1:
            raise FormatError(f"{path}: row {i} has {len(row)} cells, expected {d + 1}")
        for j, cell in enumerate(row[:-1]):
            try:
                features[i - 2, j] = float(cell)
            except ValueError:
                raise FormatError(f"{path}: row {i}, column {header[j]!r}: non-numeric {cell!r}") from None
        try:
            classes[i - 2] = int(row[-1])
        except ValueError:
            raise FormatError(f"{path}: row {i}, column 'label': non-integer {row[-1]!r}") from None

    if c is None:
        c = max(2, int(classes.max()) + 1)
    bad = np.flatnonzero((classes < 0) | (classes >= c))
    if bad.size:
        i = int(bad[0])
        raise FormatError(f"{path}: row {i + 2}, column 'label': class {classes[i]} outside [0, {c})")
    if not np.isfinite(features).all():
        i, j = np.argwhere(~np.isfinite(features))[0]
        raise FormatError(f"{path}: row {i + 2}, column {header[j]!r}: non-finite value")
    return Dataset.from_classes(features, classes, c, provenance)


# -- IDX --------------------------------------------------------------------


def _read_idx(path, magic: int, ndim: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header")
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise FormatError(f"{path}: bad magic 0x{got:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims, dtype=np.int64))
    if len(raw) - header < size:
        raise FormatError(f"{path}: truncated payload, {len(raw) - header} of {size} bytes")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path, c: int) -> Dataset:
    """Decode an IDX image/label pair; pixels are flattened row-major and divided by 255."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"count mismatch: {images.shape[0]} images, {labels.shape[0]} labels")
    if labels.size and labels.max() >= c:
        raise FormatError(f"{labels_path}: label {int(labels.max())} outside [0, {c})")
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset.from_classes(features, labels.astype(np.int64), c)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Encode uint8 ``images`` (n x rows x cols) and ``labels`` (n,) as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    Path(images_path).write_bytes(
        struct.pack(">4I", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes(order="C")
    )
    Path(labels_path).write_bytes(struct.pack(">2I", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes())
