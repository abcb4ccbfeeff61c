"""Multiclass gradient-boosted trees with a softmax objective.

Classic functional gradient descent: per round, one depth-limited
regression tree per class is fit to the current softmax residuals and
its shrunken outputs are added to the score matrix. Columns are
presorted once per fit and shared by every tree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from . import _kernels
from .base import ClassifierMixin, check_training_set
from .tree import TreeConfig

__all__ = ["GbdtConfig", "GradientBoostingClassifier", "softmax"]


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    shifted = scores - scores.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1)) + scores.max(axis=1)
    return float(np.mean(lse - scores[np.arange(len(y)), y]))


@dataclass(frozen=True)
class GbdtConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_depth=3))

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ConfigError(f"n_rounds must be >= 0, got {self.n_rounds}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(
                f"learning_rate must be in (0, 1], got {self.learning_rate}"
            )
        if self.tree.max_depth is None:
            raise ConfigError("boosted trees must be depth-limited")


class GradientBoostingClassifier(ClassifierMixin):
    """Boosted regression trees over per-class softmax residuals.

    ``train_log_loss_`` records the training loss before boosting and
    after every round; it is non-increasing for learning rates <= 1.
    """

    def __init__(self, config: GbdtConfig | None = None):
        self.config = config if config is not None else GbdtConfig()
        self.n_classes = 0
        self.n_features_in = 0

    def fit(self, X, y, seed=None, n_classes=None):
        X, y, n_classes = check_training_set(X, y, n_classes)
        if seed is None:
            seed = 0
        cfg = self.config
        n, d = X.shape
        col_order = np.argsort(X, axis=0, kind="stable").astype(np.int64)
        col_order = np.ascontiguousarray(col_order)
        n_cand = cfg.tree.resolve_candidates(d)

        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0
        scores = np.zeros((n, n_classes))
        stamp_buf = np.zeros(n, dtype=np.int64)
        stamp_base = 0
        tree_seeds = np.random.SeedSequence(seed).generate_state(
            max(cfg.n_rounds * n_classes, 1), dtype=np.uint64
        )

        feats, thrs, lefts, rights, values = [], [], [], [], []
        offsets = [0]
        self.train_log_loss_ = [_log_loss(scores, y)]
        for r in range(cfg.n_rounds):
            residual = onehot - softmax(scores)
            for c in range(n_classes):
                out = _kernels.grow_regression_tree(
                    X,
                    np.ascontiguousarray(residual[:, c]),
                    col_order,
                    cfg.tree.max_depth,
                    cfg.tree.min_samples_split,
                    n_cand,
                    tree_seeds[r * n_classes + c],
                    stamp_buf,
                    stamp_base,
                )
                feature, threshold, left, right, value, n_nodes, used = out
                stamp_base += used
                feats.append(feature)
                thrs.append(threshold)
                lefts.append(left)
                rights.append(right)
                values.append(value)
                offsets.append(offsets[-1] + n_nodes)
                leaves = _kernels.tree_apply(X, feature, threshold, left, right)
                scores[:, c] += cfg.learning_rate * value[leaves]
            self.train_log_loss_.append(_log_loss(scores, y))

        if feats:
            self.feature_ = np.concatenate(feats)
            self.threshold_ = np.concatenate(thrs)
            self.left_ = np.concatenate(lefts)
            self.right_ = np.concatenate(rights)
            self.value_ = np.concatenate(values)
        else:
            self.feature_ = np.empty(0, dtype=np.int64)
            self.threshold_ = np.empty(0)
            self.left_ = np.empty(0, dtype=np.int64)
            self.right_ = np.empty(0, dtype=np.int64)
            self.value_ = np.empty(0)
        self.offsets_ = np.asarray(offsets, dtype=np.int64)
        self.n_classes = n_classes
        self.n_features_in = d
        return self

    def decision_scores(self, X) -> np.ndarray:
        """Raw additive scores (pre-softmax)."""
        X = self._check_predict_input(X)
        return _kernels.boosted_raw_scores(
            X,
            self.feature_,
            self.threshold_,
            self.left_,
            self.right_,
            self.value_,
            self.offsets_,
            self.n_classes,
            self.config.learning_rate,
        )

    def _proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(
            _kernels.boosted_raw_scores(
                X,
                self.feature_,
                self.threshold_,
                self.left_,
                self.right_,
                self.value_,
                self.offsets_,
                self.n_classes,
                self.config.learning_rate,
            )
        )
