"""Shared classifier contract.

Every learner exposes fit / predict_proba / predict plus ``n_classes``
and ``n_features_in``. Probability rows are nonnegative and sum to one;
predict is the row-wise argmax with ties going to the lowest class id.
"""
from __future__ import annotations

import numpy as np

from ..errors import DataError


def check_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def check_training_set(X, y, n_classes=None):
    """Validate and normalize a (features, labels) pair for fitting."""
    X = check_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("cannot fit on an empty dataset")
    if y.shape != (X.shape[0],):
        raise DataError(
            f"labels shape {y.shape} does not match {X.shape[0]} rows"
        )
    if y.min() < 0:
        raise DataError("negative label id")
    inferred = int(y.max()) + 1
    if n_classes is None:
        n_classes = inferred
    elif inferred > n_classes:
        raise DataError(f"label id {inferred - 1} exceeds n_classes={n_classes}")
    return X, y, n_classes


class ClassifierMixin:
    """predict/predict_proba plumbing on top of a ``_proba`` hook."""

    n_classes: int = 0
    n_features_in: int = 0

    def _check_fitted(self):
        if self.n_classes == 0:
            raise DataError(f"{type(self).__name__} is not fitted")

    def _check_predict_input(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in:
            raise DataError(
                f"input has {X.shape[1]} columns, model expects "
                f"{self.n_features_in}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_predict_input(X)
        if X.shape[0] == 0:
            return np.zeros((0, self.n_classes))
        return self._proba(X)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def _proba(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError
