"""Bagged tree ensembles: random forest and extra-trees.

Per-tree randomness comes from seed-sequence children spawned off the
forest seed, so fitting order (or any future parallelism) cannot change
the result.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from . import _kernels
from .base import ClassifierMixin, check_training_set
from .tree import TreeConfig

__all__ = ["ForestConfig", "RandomForestClassifier", "ExtraTreesClassifier"]


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    tree: TreeConfig = field(
        default_factory=lambda: TreeConfig(n_candidate_features="sqrt")
    )
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")


class _BaseForest(ClassifierMixin):
    def __init__(self, config: ForestConfig | None = None):
        self.config = config if config is not None else self._default_config()
        self.n_classes = 0
        self.n_features_in = 0

    @staticmethod
    def _default_config() -> ForestConfig:  # pragma: no cover
        raise NotImplementedError

    def fit(self, X, y, seed=None, n_classes=None):
        X, y, n_classes = check_training_set(X, y, n_classes)
        if seed is None:
            seed = self.config.seed
        cfg = self.config
        n = X.shape[0]
        max_depth = -1 if cfg.tree.max_depth is None else cfg.tree.max_depth
        n_cand = cfg.tree.resolve_candidates(X.shape[1])
        random_thr = 1 if cfg.tree.split_style == "random" else 0

        self.trees_ = []
        for child in np.random.SeedSequence(seed).spawn(cfg.n_trees):
            rng = np.random.default_rng(child)
            if cfg.bootstrap:
                sample_idx = rng.integers(0, n, size=n, dtype=np.int64)
            else:
                sample_idx = np.arange(n, dtype=np.int64)
            kernel_seed = np.uint64(rng.integers(0, 2**63, dtype=np.int64))
            arrays = _kernels.grow_classification_tree(
                X,
                y,
                sample_idx,
                n_classes,
                max_depth,
                cfg.tree.min_samples_split,
                n_cand,
                random_thr,
                kernel_seed,
                float(cfg.tree.leaf_smoothing),
            )
            self.trees_.append(arrays[:5])
        self.n_classes = n_classes
        self.n_features_in = X.shape[1]
        return self

    def _proba(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros((X.shape[0], self.n_classes))
        for feature, threshold, left, right, dist in self.trees_:
            leaves = _kernels.tree_apply(X, feature, threshold, left, right)
            acc += dist[leaves]
        return acc / len(self.trees_)


class RandomForestClassifier(_BaseForest):
    """Bootstrap resamples plus sqrt-feature subsampling at every node."""

    @staticmethod
    def _default_config() -> ForestConfig:
        return ForestConfig()


class ExtraTreesClassifier(_BaseForest):
    """Full-sample trees with one random threshold per candidate feature."""

    @staticmethod
    def _default_config() -> ForestConfig:
        return ForestConfig(
            tree=TreeConfig(n_candidate_features="sqrt", split_style="random"),
            bootstrap=False,
        )

    def __init__(self, config: ForestConfig | None = None):
        super().__init__(config)
        if self.config.bootstrap:
            raise ConfigError("extra-trees uses the full sample per tree")
        if self.config.tree.split_style != "random":
            raise ConfigError("extra-trees requires random-threshold splits")
