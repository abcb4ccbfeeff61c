"""Deterministic synthetic datasets.

Real benchmark CSVs are acquired out-of-band (see README). For offline
runs this module generates surrogates that reproduce each reference
dataset's exact shape and class proportions with a controllable
difficulty, plus small Gaussian fixtures for tests. Every generator is
a pure function of its seed.
"""
from __future__ import annotations

import itertools

import numpy as np

from .data import Dataset
from .errors import DataError

__all__ = [
    "make_gaussian_dataset",
    "make_car_surrogate",
    "surrogate_dataset",
    "SURROGATE_NAMES",
]


def make_gaussian_dataset(
    counts,
    n_features: int,
    class_sep: float,
    seed: int,
    n_informative: int | None = None,
    class_names=None,
    shuffle: bool = True,
) -> Dataset:
    """Class-conditional Gaussian blobs with exact per-class counts.

    Class centers sit ``class_sep`` apart (in expectation) on the
    informative coordinates; remaining coordinates are pure noise.
    """
    counts = [int(c) for c in counts]
    n_classes = len(counts)
    if n_informative is None:
        n_informative = max(2, n_features // 2)
    n_informative = min(n_informative, n_features)
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(n_classes, n_informative))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    centers = directions * class_sep / np.sqrt(2.0)

    X_parts, y_parts = [], []
    for c, n_c in enumerate(counts):
        block = rng.normal(size=(n_c, n_features))
        block[:, :n_informative] += centers[c]
        X_parts.append(block)
        y_parts.append(np.full(n_c, c, dtype=np.int64))
    X = np.vstack(X_parts)
    y = np.concatenate(y_parts)
    if shuffle:
        perm = rng.permutation(len(y))
        X, y = X[perm], y[perm]
    if class_names is None:
        class_names = [f"c{c}" for c in range(n_classes)]
    feature_names = [f"f{j}" for j in range(n_features)]
    return Dataset(X, y, class_names, feature_names)


_CAR_LEVELS = (4, 4, 4, 3, 3, 3)
_CAR_WEIGHTS = (1.0, 1.0, 0.4, 1.3, 0.6, 2.0)
_CAR_FEATURES = ("buying", "maint", "doors", "persons", "lug_boot", "safety")


def make_car_surrogate() -> Dataset:
    """Ordinal-attribute grading dataset, 1727 rows over a 6-factor grid.

    Labels combine two hard gates (lowest safety or lowest capacity is
    always "unacc") with a monotone quality score thresholded to yield
    class counts 1209/384/69/65. Fully deterministic; no randomness.
    """
    grid = list(itertools.product(*[range(k) for k in _CAR_LEVELS]))
    grid = grid[1:]  # 1728 combinations; drop the first for the 1727-row shape
    forced, scored = [], []
    for row in grid:
        if row[5] == 0 or row[3] == 0:
            forced.append(row)
        else:
            score = sum(w * v for w, v in zip(_CAR_WEIGHTS, row))
            scored.append((score, row))
    scored.sort(key=lambda t: (-t[0], t[1]))
    label_of: dict[tuple, str] = {row: "unacc" for row in forced}
    for rank, (_, row) in enumerate(scored):
        if rank < 65:
            label_of[row] = "vgood"
        elif rank < 65 + 69:
            label_of[row] = "good"
        elif rank < 65 + 69 + 384:
            label_of[row] = "acc"
        else:
            label_of[row] = "unacc"
    X = np.asarray(grid, dtype=np.float64)
    names = sorted(set(label_of.values()))
    index = {n: i for i, n in enumerate(names)}
    y = np.asarray([index[label_of[row]] for row in grid], dtype=np.int64)
    return Dataset(X, y, names, _CAR_FEATURES)


# name -> (class counts, n_features, class_sep, seed, class_names)
_SURROGATE_RECIPES = {
    "diabetes": ([500, 268], 8, 2.1, 101, ["neg", "pos"]),
    "gender": ([1584, 1584], 20, 4.2, 102, ["female", "male"]),
    "cortex": ([150, 150, 135, 135, 135, 135, 135, 105], 77, 7.0, 103, None),
    "frogs": (
        [672, 542, 3478, 310, 472, 1121, 270, 114, 68, 148],
        24,
        9.0,
        104,
        None,
    ),
    "cardio": ([35021, 34979], 11, 1.35, 105, ["absent", "present"]),
}

SURROGATE_NAMES = ("car",) + tuple(_SURROGATE_RECIPES)


def surrogate_dataset(name: str) -> Dataset:
    """Bundled surrogate by reference-dataset name."""
    if name == "car":
        return make_car_surrogate()
    if name not in _SURROGATE_RECIPES:
        raise DataError(
            f"no surrogate named {name!r}; available: {sorted(SURROGATE_NAMES)}"
        )
    counts, d, sep, seed, class_names = _SURROGATE_RECIPES[name]
    return make_gaussian_dataset(
        counts, d, sep, seed, class_names=class_names
    )
