"""CART decision tree with Gini impurity.

Supports exhaustive midpoint thresholds (classic CART) and one random
threshold per candidate feature (the extremely-randomized style used by
the extra-trees forest).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from ..errors import ConfigError
from . import _kernels
from .base import ClassifierMixin, check_training_set

__all__ = ["TreeConfig", "DecisionTreeClassifier", "gini_impurity"]


def gini_impurity(labels) -> float:
    """Gini impurity of a label multiset: 1 - sum of squared proportions."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty label multiset")
    counts = np.bincount(labels)
    p = counts / labels.size
    return float(1.0 - np.sum(p * p))


@dataclass(frozen=True)
class TreeConfig:
    """Induction limits and split behaviour for a single tree.

    n_candidate_features: "all", "sqrt", or an explicit count; the
    candidate columns are redrawn at every node.
    """

    max_depth: int | None = None
    min_samples_split: int = 2
    n_candidate_features: int | str = "all"
    split_style: str = "exhaustive"
    leaf_smoothing: float = 0.0

    def __post_init__(self):
        if self.min_samples_split < 2:
            raise ConfigError(
                f"min_samples_split must be >= 2, got {self.min_samples_split}"
            )
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.split_style not in ("exhaustive", "random"):
            raise ConfigError(f"unknown split_style {self.split_style!r}")
        if isinstance(self.n_candidate_features, str):
            if self.n_candidate_features not in ("all", "sqrt"):
                raise ConfigError(
                    f"unknown candidate rule {self.n_candidate_features!r}"
                )
        elif self.n_candidate_features < 1:
            raise ConfigError("n_candidate_features must be >= 1")
        if self.leaf_smoothing < 0:
            raise ConfigError("leaf_smoothing must be >= 0")

    def resolve_candidates(self, d: int) -> int:
        if self.n_candidate_features == "all":
            return d
        if self.n_candidate_features == "sqrt":
            return max(1, int(math.floor(math.sqrt(d))))
        k = int(self.n_candidate_features)
        if k > d:
            raise ConfigError(
                f"n_candidate_features={k} exceeds {d} available columns"
            )
        return k


@dataclass
class DecisionTreeClassifier(ClassifierMixin):
    """Single CART tree; leaves store class-frequency distributions."""

    config: TreeConfig = field(default_factory=TreeConfig)
    seed: int = 0

    n_classes: int = 0
    n_features_in: int = 0

    def fit(self, X, y, seed=None, n_classes=None, sample_idx=None):
        X, y, n_classes = check_training_set(X, y, n_classes)
        if seed is None:
            seed = self.seed
        if sample_idx is None:
            sample_idx = np.arange(X.shape[0], dtype=np.int64)
        else:
            sample_idx = np.ascontiguousarray(sample_idx, dtype=np.int64)
        max_depth = -1 if self.config.max_depth is None else self.config.max_depth
        (
            self.feature_,
            self.threshold_,
            self.left_,
            self.right_,
            self.dist_,
            self.n_nodes_,
        ) = _kernels.grow_classification_tree(
            X,
            y,
            sample_idx,
            n_classes,
            max_depth,
            self.config.min_samples_split,
            self.config.resolve_candidates(X.shape[1]),
            1 if self.config.split_style == "random" else 0,
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
            float(self.config.leaf_smoothing),
        )
        self.n_classes = n_classes
        self.n_features_in = X.shape[1]
        return self

    @property
    def root_split(self) -> tuple[int, float] | None:
        """(feature, threshold) at the root, or None for a leaf-only tree."""
        self._check_fitted()
        if self.feature_[0] < 0:
            return None
        return int(self.feature_[0]), float(self.threshold_[0])

    def _proba(self, X: np.ndarray) -> np.ndarray:
        leaves = _kernels.tree_apply(
            X, self.feature_, self.threshold_, self.left_, self.right_
        )
        return self.dist_[leaves]
