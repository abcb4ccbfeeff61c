"""Dataset container, CSV ingestion, label encoding, and train/holdout splits.

A :class:`Dataset` is an immutable pairing of a dense float64 feature
matrix with integer class ids. Label encoding is lexicographic over the
original label strings so that runs are reproducible across platforms.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "Dataset",
    "SplitPair",
    "encode_labels",
    "load_csv",
    "load_features_csv",
    "save_csv",
    "stratified_split",
    "random_split",
    "stratified_cap",
    "class_proportions",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix plus encoded labels.

    features: (n_samples, n_features) float64.
    labels: (n_samples,) int64 with values in 0..C-1; every id occurs.
    class_names: the C original label strings, in encoding order.
    feature_names: column names, possibly synthetic "f0".."f{d-1}".
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if features.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DataError(
                f"labels length {labels.shape} does not match "
                f"{features.shape[0]} feature rows"
            )
        if len(self.feature_names) != features.shape[1]:
            raise DataError(
                f"{len(self.feature_names)} feature names for "
                f"{features.shape[1]} columns"
            )
        if not np.all(np.isfinite(features)):
            bad = np.argwhere(~np.isfinite(features))[0]
            raise DataError(
                f"non-finite feature value at row {bad[0]}, column {bad[1]}"
            )
        c = len(self.class_names)
        if c == 0:
            raise DataError("dataset has no classes")
        if labels.size == 0:
            raise DataError("dataset has no rows")
        if labels.min() < 0 or labels.max() >= c:
            raise DataError(
                f"label ids must lie in 0..{c - 1}, "
                f"got range {labels.min()}..{labels.max()}"
            )
        present = np.bincount(labels, minlength=c)
        if np.any(present == 0):
            missing = [self.class_names[i] for i in np.flatnonzero(present == 0)]
            raise DataError(f"classes never observed in labels: {missing}")
        features.flags.writeable = False
        labels.flags.writeable = False

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def select(self, rows: np.ndarray) -> "Dataset":
        """Row subset, preserving order of ``rows``."""
        return Dataset(
            self.features[rows],
            self.labels[rows],
            self.class_names,
            self.feature_names,
        )

    def equals(self, other: "Dataset") -> bool:
        return (
            self.class_names == other.class_names
            and self.feature_names == other.feature_names
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )


@dataclass(frozen=True)
class SplitPair:
    """A train/holdout partition of one source dataset."""

    train: Dataset
    holdout: Dataset
    seed: int
    fraction: float


def encode_labels(raw_labels) -> tuple[list[int], list[str]]:
    """Map raw label strings to dense ids.

    Class names are the lexicographically sorted distinct labels, so the
    encoding is independent of row order.
    """
    raw = [str(v) for v in raw_labels]
    if not raw:
        raise DataError("cannot encode an empty label list")
    class_names = sorted(set(raw))
    index = {name: i for i, name in enumerate(class_names)}
    return [index[v] for v in raw], class_names


def load_csv(path, label_column, has_header: bool = True) -> Dataset:
    """Load a comma-separated file into a Dataset.

    ``label_column`` selects the label by header name (requires
    ``has_header``) or by zero-based column index. All other cells must
    parse as finite reals.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # drop blank lines
    if not rows:
        raise DataError(f"{path} is empty")

    header: list[str] | None = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path} has a header but no data rows")

    width = len(rows[0]) if header is None else len(header)
    if isinstance(label_column, int):
        label_idx = label_column
        if not 0 <= label_idx < width:
            raise DataError(
                f"label column index {label_idx} out of range for "
                f"{width} columns"
            )
    else:
        if header is None:
            raise DataError(
                "label column selected by name requires a header row"
            )
        if label_column not in header:
            raise DataError(f"label column {label_column!r} not in header")
        label_idx = header.index(label_column)

    first_line = 2 if has_header else 1
    raw_labels: list[str] = []
    feature_rows: list[list[float]] = []
    for i, row in enumerate(rows):
        line_no = first_line + i
        if len(row) != width:
            raise DataError(
                f"{path}: line {line_no} has {len(row)} cells, expected {width}"
            )
        values: list[float] = []
        for j, cell in enumerate(row):
            if j == label_idx:
                raw_labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {line_no}, column {j}: "
                    f"non-numeric feature value {cell.strip()!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(
                    f"{path}: line {line_no}, column {j}: "
                    f"non-finite feature value {cell.strip()!r}"
                )
            values.append(v)
        feature_rows.append(values)

    ids, class_names = encode_labels(raw_labels)
    if header is not None:
        feature_names = [h for j, h in enumerate(header) if j != label_idx]
    else:
        feature_names = [f"f{j}" for j in range(width - 1)]
    features = np.asarray(feature_rows, dtype=np.float64)
    if features.size == 0:
        features = features.reshape(len(feature_rows), 0)
    return Dataset(features, np.asarray(ids), class_names, feature_names)


def load_features_csv(path, has_header: bool = True):
    """Load a label-free CSV as (matrix, feature_names).

    Used at prediction time, where rows carry features only.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path} is empty")
    header = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path} has a header but no data rows")
    width = len(header) if header is not None else len(rows[0])
    first_line = 2 if has_header else 1
    out = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        line_no = first_line + i
        if len(row) != width:
            raise DataError(
                f"{path}: line {line_no} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {line_no}, column {j}: "
                    f"non-numeric feature value {cell.strip()!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(
                    f"{path}: line {line_no}, column {j}: "
                    f"non-finite feature value {cell.strip()!r}"
                )
            out[i, j] = v
    names = header if header is not None else [f"f{j}" for j in range(width)]
    return out, names


def save_csv(ds: Dataset, path, label_name: str = "label") -> None:
    """Write a Dataset back to CSV with a header row.

    Floats are written with repr (shortest round-trip form), so a
    load/save/load cycle reproduces values exactly.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [label_name])
        for i in range(ds.n_samples):
            row = [repr(float(v)) for v in ds.features[i]]
            row.append(ds.class_names[ds.labels[i]])
            writer.writerow(row)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: Dataset, holdout_fraction: float, seed: int) -> SplitPair:
    """Partition rows per class at the requested fraction.

    Each class sends round(n_c * fraction) rows to the holdout, clamped
    so both sides keep at least one row per class. Assignment depends
    only on the seed; row order within each part follows the source.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise DataError(f"holdout fraction must be in (0,1), got {holdout_fraction}")
    counts = class_proportions(ds)
    thin = [ds.class_names[c] for c, n in enumerate(counts) if n < 2]
    if thin:
        raise DataError(f"cannot stratify: classes with fewer than 2 samples: {thin}")
    rng = np.random.default_rng(seed)
    holdout_idx: list[np.ndarray] = []
    train_idx: list[np.ndarray] = []
    for c, n_c in enumerate(counts):
        class_rows = np.flatnonzero(ds.labels == c)
        take = min(max(_round_half_up(n_c * holdout_fraction), 1), n_c - 1)
        perm = rng.permutation(class_rows)
        holdout_idx.append(perm[:take])
        train_idx.append(perm[take:])
    hold = np.sort(np.concatenate(holdout_idx))
    train = np.sort(np.concatenate(train_idx))
    return SplitPair(ds.select(train), ds.select(hold), seed, holdout_fraction)


def random_split(ds: Dataset, holdout_fraction: float, seed: int) -> SplitPair:
    """Plain (non-stratified) random split.

    Fails if either part ends up missing a class, since Datasets require
    every class to be present.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise DataError(f"holdout fraction must be in (0,1), got {holdout_fraction}")
    n = ds.n_samples
    take = min(max(_round_half_up(n * holdout_fraction), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    hold = np.sort(perm[:take])
    train = np.sort(perm[take:])
    for name, part in (("train", train), ("holdout", hold)):
        if len(np.unique(ds.labels[part])) < ds.n_classes:
            raise DataError(
                f"random split dropped a class from the {name} part; "
                "use a stratified split"
            )
    return SplitPair(ds.select(train), ds.select(hold), seed, holdout_fraction)


def stratified_cap(ds: Dataset, max_rows: int, seed: int) -> Dataset:
    """Subsample to at most ``max_rows`` rows, keeping class proportions.

    Uses largest-remainder apportionment with at least one row per class.
    Returns the dataset unchanged when it is already small enough.
    """
    if max_rows < ds.n_classes:
        raise DataError(
            f"max_rows {max_rows} is below the class count {ds.n_classes}"
        )
    n = ds.n_samples
    if max_rows >= n:
        return ds
    counts = np.asarray(class_proportions(ds), dtype=np.float64)
    exact = counts * (max_rows / n)
    keep = np.maximum(np.floor(exact).astype(int), 1)
    remainder = exact - np.floor(exact)
    short = max_rows - int(keep.sum())
    if short > 0:
        order = np.argsort(-remainder, kind="stable")
        for c in order[:short]:
            keep[c] += 1
    elif short < 0:
        order = np.argsort(remainder, kind="stable")
        taken = 0
        for c in order:
            while keep[c] > 1 and taken < -short:
                keep[c] -= 1
                taken += 1
            if taken >= -short:
                break
    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    for c, k in enumerate(keep):
        class_rows = np.flatnonzero(ds.labels == c)
        perm = rng.permutation(class_rows)
        chosen.append(perm[:k])
    return ds.select(np.sort(np.concatenate(chosen)))


def class_proportions(ds: Dataset) -> list[int]:
    """Per-class sample counts, ordered like ``class_names``."""
    return np.bincount(ds.labels, minlength=ds.n_classes).tolist()
