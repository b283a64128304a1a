"""Datasets, CSV I/O, [-1, 1] feature scaling, mini-batching and class counts."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .numerics import SeededRng


class DataFormatError(ValueError):
    """Malformed dataset file; message carries row/column coordinates."""


@dataclass(frozen=True)
class FeatureSchema:
    feature_names: tuple
    label_column: str = "label"

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        object.__setattr__(self, "feature_names", names)
        if not names or any(not n for n in names):
            raise ValueError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if self.label_column in names:
            raise ValueError(f"label column {self.label_column!r} is also a feature name")

    @property
    def columns(self) -> list:
        return [*self.feature_names, self.label_column]


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema
    class_names: tuple

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(self.schema.feature_names):
            raise ValueError(
                f"feature matrix shape {X.shape} does not match {len(self.schema.feature_names)} features"
            )
        if y.shape != (X.shape[0],):
            raise ValueError("label vector length differs from row count")
        if y.size and (y.min() < 0 or y.max() >= len(self.class_names)):
            raise ValueError("label index out of range of class_names")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(self, X=self.X[idx], y=self.y[idx])

    def with_features(self, X) -> "Dataset":
        return replace(self, X=X)

    def labels(self) -> list:
        """Original label strings, one per row."""
        return [self.class_names[i] for i in self.y]


def encode_labels(labels, class_names=None):
    """Map label strings to dense indices in first-appearance order.

    With ``class_names`` given, that order is kept and unseen labels are
    appended after it.
    """
    names = list(class_names or [])
    index = {n: i for i, n in enumerate(names)}
    y = np.empty(len(labels), dtype=np.int64)
    for k, lab in enumerate(labels):
        lab = str(lab)
        if lab not in index:
            index[lab] = len(names)
            names.append(lab)
        y[k] = index[lab]
    return y, tuple(names)


def load_csv(path, schema: FeatureSchema | None = None, class_names=None) -> Dataset:
    """Read a dataset CSV (header row, features then label column).

    Without ``schema`` every column but the last is a feature and the last
    is the label. Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataFormatError(f"{path}: empty file")
        if schema is None:
            if len(header) < 2:
                raise DataFormatError(f"{path}: need at least one feature and a label column")
            schema = FeatureSchema(tuple(header[:-1]), header[-1])
        missing = [c for c in schema.columns if c not in header]
        if missing:
            raise DataFormatError(f"{path}: missing column(s) {', '.join(missing)}")
        cols = [header.index(c) for c in schema.feature_names]
        lab_col = header.index(schema.label_column)
        rows, labels = [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: row {rowno} has {len(row)} fields, expected {len(header)}"
                )
            vals = []
            for j, name in zip(cols, schema.feature_names):
                try:
                    v = float(row[j])
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DataFormatError(
                        f"{path}: row {rowno}, column {name!r}: non-numeric value {row[j]!r}"
                    )
                vals.append(v)
            rows.append(vals)
            labels.append(row[lab_col])
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    y, names = encode_labels(labels, class_names)
    return Dataset(np.array(rows), y, schema, names)


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` with shortest round-trip float formatting and '\\n' newlines."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.schema.columns)
        for row, lab in zip(ds.X.tolist(), ds.y.tolist()):
            w.writerow([repr(v) for v in row] + [ds.class_names[lab]])


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalerParams:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64)
        hi = np.asarray(self.max, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi < lo):
            raise ValueError("scaler needs equal-length min/max with max >= min")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def __len__(self):
        return self.min.size

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        self._check(X)
        span = self.max - self.min
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, 2.0 * (X - self.min) / safe - 1.0, 0.0)

    def inverse(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        self._check(Z)
        span = self.max - self.min
        return np.where(span > 0, (Z + 1.0) * 0.5 * span + self.min, self.min)

    def _check(self, X):
        if X.ndim != 2 or X.shape[1] != self.min.size:
            raise ValueError(f"scaler has {self.min.size} features, data has shape {X.shape}")


def fit_scaler(ds: Dataset) -> ScalerParams:
    return ScalerParams(ds.X.min(axis=0), ds.X.max(axis=0))


def apply_scale(ds: Dataset, sp: ScalerParams) -> Dataset:
    return ds.with_features(sp.transform(ds.X))


def inverse_scale(ds: Dataset, sp: ScalerParams) -> Dataset:
    return ds.with_features(sp.inverse(ds.X))


# ---------------------------------------------------------------------------
# Batching, splits and class statistics
# ---------------------------------------------------------------------------

def batch_indices(n: int, batch_size: int, rng: SeededRng) -> list:
    """One epoch of shuffled index batches; only the last may be short."""
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def make_batches(ds: Dataset, batch_size: int, rng: SeededRng) -> list:
    return [(ds.X[idx], ds.y[idx]) for idx in batch_indices(ds.n_samples, batch_size, rng)]


@dataclass(frozen=True)
class ClassStats:
    counts: np.ndarray
    n_max: int
    ratios: np.ndarray = field(repr=False)


def class_stats(ds: Dataset) -> ClassStats:
    counts = np.bincount(ds.y, minlength=ds.n_classes)
    n_max = int(counts.max())
    return ClassStats(counts, n_max, counts / n_max)


def train_test_split(ds: Dataset, test_fraction: float, seed: int):
    """Stratified split: each class contributes ``round(test_fraction * N_c)`` test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = SeededRng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.n_classes):
        idx = np.flatnonzero(ds.y == c)
        idx = idx[rng.permutation(idx.size)]
        k = int(round(test_fraction * idx.size))
        test_idx.append(idx[:k])
        train_idx.append(idx[k:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return ds.subset(train_idx), ds.subset(test_idx)
