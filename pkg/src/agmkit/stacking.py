"""Classic two-layer stacking baseline plus shared k-fold machinery.

Layer one is a boosted-tree model whose out-of-fold probabilities are
concatenated to the original features; layer two is a softmax
regression trained on the widened matrix. At prediction time the
layer-one block comes from a model refit on the full training set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError
from .learners import GbdtConfig, GradientBoostingClassifier, SoftmaxRegression

__all__ = [
    "stratified_fold_indices",
    "out_of_fold_probabilities",
    "TwoLayerStackingModel",
    "fit_two_layer_stacking",
]


def stratified_fold_indices(y, folds: int, rng: np.random.Generator):
    """Partition row ids into ``folds`` class-balanced folds."""
    y = np.asarray(y, dtype=np.int64)
    if folds < 2:
        raise DataError(f"need at least 2 folds, got {folds}")
    counts = np.bincount(y)
    thin = np.flatnonzero((counts > 0) & (counts < folds))
    if thin.size:
        raise DataError(
            f"classes {thin.tolist()} have fewer samples than folds={folds}"
        )
    assignment = np.empty(len(y), dtype=np.int64)
    for c in range(len(counts)):
        rows = np.flatnonzero(y == c)
        if rows.size == 0:
            continue
        perm = rng.permutation(rows)
        assignment[perm] = np.arange(perm.size) % folds
    return [np.flatnonzero(assignment == j) for j in range(folds)]


def out_of_fold_probabilities(factory, X, y, folds, rng, n_classes):
    """OOF probability block: each row predicted by the model that never saw it."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    fold_rows = stratified_fold_indices(y, folds, rng)
    block = np.zeros((X.shape[0], n_classes))
    for rows in fold_rows:
        mask = np.ones(X.shape[0], dtype=bool)
        mask[rows] = False
        model = factory()
        model.fit(X[mask], y[mask], seed=int(rng.integers(2**63)),
                  n_classes=n_classes)
        block[rows] = model.predict_proba(X[rows])
    return block


@dataclass
class TwoLayerStackingModel:
    base_model: GradientBoostingClassifier
    meta_model: SoftmaxRegression
    class_names: tuple[str, ...]
    n_features_in: int
    folds: int
    seed: int

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in:
            raise DataError(
                f"input has {X.shape[1] if X.ndim == 2 else '?'} columns, "
                f"model expects {self.n_features_in}"
            )
        block = self.base_model.predict_proba(X)
        return self.meta_model.predict_proba(np.hstack([X, block]))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def fit_two_layer_stacking(
    train: Dataset,
    folds: int = 5,
    seed: int = 0,
    gbdt_config: GbdtConfig | None = None,
    meta_epochs: int = 500,
    meta_step_size: float = 0.5,
) -> TwoLayerStackingModel:
    """Fit the two-layer baseline with out-of-fold level-one features."""
    cfg = gbdt_config if gbdt_config is not None else GbdtConfig()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    factory = lambda: GradientBoostingClassifier(cfg)  # noqa: E731

    oof = out_of_fold_probabilities(
        factory, train.features, train.labels, folds, rng, train.n_classes
    )
    base = factory().fit(
        train.features,
        train.labels,
        seed=int(rng.integers(2**63)),
        n_classes=train.n_classes,
    )
    meta = SoftmaxRegression(epochs=meta_epochs, step_size=meta_step_size)
    meta.fit(
        np.hstack([train.features, oof]),
        train.labels,
        n_classes=train.n_classes,
    )
    return TwoLayerStackingModel(
        base_model=base,
        meta_model=meta,
        class_names=train.class_names,
        n_features_in=train.n_features,
        folds=folds,
        seed=seed,
    )
