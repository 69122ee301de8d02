"""Synthetic datasets, binary quantisation of inputs, IDX images and CSV files.

Classification labels are 0 for "class one" and 1 for "class two".
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from . import rng

TWO_PI = 2.0 * math.pi
Kind = Literal["gaussian_means", "linsep", "regression_tanh", "correlated_gaussian", "idx_images"]
KINDS = ("gaussian_means", "linsep", "regression_tanh", "correlated_gaussian", "idx_images")

CORR_DIAG = 0.8
CORR_OFF = 0.792


class DataFormatError(ValueError):
    """Malformed dataset or image file."""


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    task: Literal["classification", "regression"] = "classification"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.task == "classification":
            self.labels = np.asarray(self.labels, dtype=int)
        else:
            self.labels = np.asarray(self.labels, dtype=float)
        if len(self.labels) != len(self.features):
            raise ValueError("one label per sample required")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


@dataclass(frozen=True)
class DatasetSpec:
    kind: Kind
    dim: int
    size: int
    seed: int = 1
    sigma2: float = 0.8
    margin: float = 0.3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.dim < 1 or self.size < 0:
            raise ValueError("dim must be >= 1 and size >= 0")


def generate(spec: DatasetSpec, purpose: str = "data") -> Dataset:
    """Dispatch on ``spec.kind``.  ``purpose`` separates train and test draws."""
    if spec.kind == "gaussian_means":
        return gen_gaussian_means(spec.dim, spec.size, spec.sigma2, spec.seed, purpose)
    if spec.kind == "linsep":
        return gen_linsep(spec.dim, spec.size, spec.margin, spec.seed, purpose)
    if spec.kind == "regression_tanh":
        return gen_regression(spec.dim, spec.size, spec.seed, purpose)
    if spec.kind == "correlated_gaussian":
        return gen_correlated(spec.dim, spec.size, spec.seed, purpose)
    raise ValueError("idx_images datasets are loaded from files, not generated")


def _check_balanced(size: int) -> int:
    if size % 2:
        raise ValueError(f"balanced datasets need an even size, got {size}")
    return size // 2


def class_means(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate means of the two Gaussian classes (coordinates are 0-based)."""
    d = np.arange(dim)
    step = TWO_PI / 16
    return (step * (d % 8)) % TWO_PI, (step * (8 + d % 8)) % TWO_PI


def _shuffled(features, labels, gen, task="classification", meta=None) -> Dataset:
    order = gen.permutation(len(labels))
    return Dataset(features[order], labels[order], task, meta or {})


def gen_gaussian_means(dim: int, size: int, sigma2: float = 0.8, seed: int = 1,
                       purpose: str = "data") -> Dataset:
    """Independent Gaussian coordinates with class-dependent means."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    half = _check_balanced(size)
    gen = rng.stream(seed, purpose, 0)
    mu0, mu1 = class_means(dim)
    std = math.sqrt(sigma2)
    x0 = mu0 + std * rng.normal(gen, (half, dim))
    x1 = mu1 + std * rng.normal(gen, (half, dim))
    labels = np.repeat([0, 1], half)
    return _shuffled(np.vstack([x0, x1]), labels, gen, meta={"sigma2": sigma2})


def gen_linsep(dim: int, size: int, margin: float = 0.3, seed: int = 1,
               purpose: str = "data") -> Dataset:
    """Uniform points on ``[-pi/2, pi/2]^D`` kept only outside the margin slab.

    Class 0 needs ``sum(x) > margin * D`` and class 1 ``sum(x) < -margin * D``.
    ``meta`` records the number of raw draws and how many fell in each class
    region, so per-class acceptance rates can be checked.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if margin >= math.pi / 2:
        raise ValueError("margin >= pi/2 leaves an empty acceptance region")
    half = _check_balanced(size)
    gen = rng.stream(seed, purpose, 1)
    thresh = margin * dim
    kept: list[list[np.ndarray]] = [[], []]
    have = [0, 0]
    raw = 0
    accepted = [0, 0]
    batch = 4096
    while min(have) < half:
        x = rng.uniform(gen, (batch, dim), -math.pi / 2, math.pi / 2)
        s = x.sum(axis=1)
        raw += batch
        for label, mask in ((0, s > thresh), (1, s < -thresh)):
            accepted[label] += int(mask.sum())
            if have[label] < half:
                take = x[mask][: half - have[label]]
                kept[label].append(take)
                have[label] += len(take)
    parts = [np.vstack(k) if k else np.empty((0, dim)) for k in kept]
    labels = np.repeat([0, 1], half)
    meta = {"margin": margin, "raw_draws": raw, "accepted_class0": accepted[0],
            "accepted_class1": accepted[1]}
    return _shuffled(np.vstack(parts), labels, gen, meta=meta)


def linsep_sigma2_effective(dim: int, margin: float = 0.3, samples: int = 200_000, seed: int = 0) -> float:
    """Per-coordinate variance of accepted linsep features, estimated by sampling.

    Used only when comparing uniform data to the Gaussian concentration bound.
    """
    ds = gen_linsep(dim, 2 * max(1, samples // 2), margin, seed, "aux")
    return float(np.mean([ds.features[ds.labels == c].var(axis=0).mean() for c in (0, 1)]))


def gen_regression(dim: int, size: int, seed: int = 1, purpose: str = "data") -> Dataset:
    """Uniform ``[-1, 1]^D`` inputs with targets ``(1 + tanh(sum x)) / 2``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    gen = rng.stream(seed, purpose, 2)
    x = rng.uniform(gen, (size, dim), -1.0, 1.0)
    return Dataset(x, regression_target(x), "regression")


def regression_target(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(np.asarray(x, dtype=float).sum(axis=-1)))


def correlated_covariance(dim: int) -> np.ndarray:
    cov = np.full((dim, dim), CORR_OFF)
    np.fill_diagonal(cov, CORR_DIAG)
    return cov


def gen_correlated(dim: int, size: int, seed: int = 1, purpose: str = "data") -> Dataset:
    """Class-dependent means as :func:`gen_gaussian_means`, shared strongly
    correlated covariance; sampled through the covariance eigendecomposition."""
    if dim < 2:
        raise ValueError("correlated data needs dim >= 2")
    half = _check_balanced(size)
    cov = correlated_covariance(dim)
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-12:
        raise ValueError("covariance is not positive semidefinite")
    root = v * np.sqrt(np.clip(w, 0, None))
    gen = rng.stream(seed, purpose, 3)
    mu0, mu1 = class_means(dim)
    x0 = mu0 + rng.normal(gen, (half, dim)) @ root.T
    x1 = mu1 + rng.normal(gen, (half, dim)) @ root.T
    labels = np.repeat([0, 1], half)
    return _shuffled(np.vstack([x0, x1]), labels, gen)


# -- binary quantisation ------------------------------------------------------------------


def quantize(x: np.ndarray, q: int) -> tuple[np.ndarray, float]:
    """Truncate each angle (reduced mod 2 pi) to 3 integer and ``q`` fractional bits.

    Returns the quantised values and the largest absolute change relative to
    the reduced input; that change is always below ``2**-q``.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    x = np.mod(np.asarray(x, dtype=float), TWO_PI)
    scale = 2.0**q
    xq = np.floor(x * scale) / scale
    err = float(np.max(np.abs(x - xq))) if x.size else 0.0
    return xq, err


def approx_qubits_needed(n_qubits: int, layers: int, repetitions: int, delta: float) -> int:
    """Fractional bits ``ceil(log2(3 P L N / delta))`` for output error ``delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return max(0, math.ceil(math.log2(3 * repetitions * layers * n_qubits / delta)))


def approx_error_bound(n_qubits: int, layers: int, repetitions: int, q: int) -> float:
    """``3 N L P 2**-q``: worst-case output change from ``q``-bit truncation."""
    return 3 * n_qubits * layers * repetitions * 2.0**-q


# -- IDX images -----------------------------------------------------------------------------

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _read_idx(path: Path, magic: int, ndim: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    header = 4 + 4 * ndim
    if len(raw) < 4:
        raise DataFormatError(f"{path}: truncated header")
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise DataFormatError(f"{path}: bad magic 0x{got:08x}, expected 0x{magic:08x}")
    if len(raw) < header:
        raise DataFormatError(f"{path}: truncated header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header])
    count = int(np.prod(dims))
    if len(raw) - header < count:
        raise DataFormatError(f"{path}: truncated payload ({len(raw) - header} < {count} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def read_idx_images(path) -> np.ndarray:
    return _read_idx(path, IDX_IMAGES_MAGIC, 3)


def read_idx_labels(path) -> np.ndarray:
    return _read_idx(path, IDX_LABELS_MAGIC, 1)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, r, c = images.shape
    Path(path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, r, c) + images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, len(labels)) + labels.tobytes())


def _area_matrix(src: int, dst: int) -> np.ndarray:
    """Row-stochastic matrix averaging ``src`` pixels into ``dst`` equal bins."""
    a = np.zeros((dst, src))
    edges = np.linspace(0, src, dst + 1)
    for i in range(dst):
        lo, hi = edges[i], edges[i + 1]
        for j in range(int(math.floor(lo)), int(math.ceil(hi))):
            a[i, j] = min(hi, j + 1) - max(lo, j)
    return a / a.sum(axis=1, keepdims=True)


def downsample(images: np.ndarray, size: int) -> np.ndarray:
    """Area-weighted block mean of ``(n, rows, cols)`` images to ``size x size``."""
    images = np.asarray(images, dtype=float)
    rows = _area_matrix(images.shape[1], size)
    cols = _area_matrix(images.shape[2], size)
    return np.einsum("ir,nrc,jc->nij", rows, images, cols)


def load_idx_images(images_path, labels_path, downsample_to: int = 12,
                    angle_scale: float = math.pi, digits: tuple[int, int] = (0, 1)) -> Dataset:
    """Two-digit subset of an IDX image set as angle features.

    Pixels are averaged down to ``downsample_to`` squared and mapped linearly
    from ``[0, 255]`` to ``[0, angle_scale]``; digit ``digits[k]`` gets label ``k``.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise DataFormatError(f"{len(images)} images but {len(labels)} labels")
    keep = np.isin(labels, digits)
    small = downsample(images[keep], downsample_to)
    feats = small.reshape(len(small), -1) * (angle_scale / 255.0)
    y = (labels[keep] == digits[1]).astype(int)
    return Dataset(feats, y, "classification", {"angle_scale": angle_scale})


# -- CSV ----------------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"f{i}" for i in range(ds.dim)] + ["label"])
    for x, y in zip(ds.features, ds.labels):
        label = str(int(y)) if ds.task == "classification" else _fmt(y)
        w.writerow([_fmt(v) for v in x] + [label])
    return buf.getvalue()


def write_dataset(path, ds: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(ds))


def read_dataset(path, task: str | None = None) -> Dataset:
    """Read a dataset CSV.  ``task`` defaults to classification when every
    label is exactly 0 or 1 and to regression otherwise."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    d = len(header) - 1
    if d < 1 or header != [f"f{i}" for i in range(d)] + ["label"]:
        raise DataFormatError(f"{path}: bad header {header!r}")
    feats, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != d + 1:
            raise DataFormatError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            feats.append([float(v) for v in row[:d]])
            labels.append(float(row[d]))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    labels_arr = np.asarray(labels, dtype=float)
    if task is None:
        is_cls = len(labels) == 0 or bool(np.all((labels_arr == 0) | (labels_arr == 1)))
        task = "classification" if is_cls else "regression"
    feats_arr = np.asarray(feats, dtype=float).reshape(len(feats), d)
    return Dataset(feats_arr, labels_arr, task)
