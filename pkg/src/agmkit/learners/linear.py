"""Multinomial logistic regression by full-batch gradient descent.

Features are standardized internally (constant columns get unit scale)
and weights start at zero, so training is deterministic without any
random state.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import ClassifierMixin, check_training_set
from .boosting import softmax

__all__ = ["SoftmaxRegression"]


class SoftmaxRegression(ClassifierMixin):
    def __init__(self, epochs: int = 500, step_size: float = 0.5):
        if epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {epochs}")
        if step_size <= 0:
            raise ConfigError(f"step_size must be positive, got {step_size}")
        self.epochs = epochs
        self.step_size = step_size
        self.n_classes = 0
        self.n_features_in = 0

    @staticmethod
    def loss_and_grad(weights, Xb, onehot):
        """Mean cross-entropy and its gradient w.r.t. the weight matrix.

        ``Xb`` is the standardized design matrix with a trailing ones
        column; ``weights`` has shape (d + 1, C).
        """
        n = Xb.shape[0]
        probs = softmax(Xb @ weights)
        with np.errstate(divide="ignore"):
            # a saturated wrong prediction yields log(0) = -inf, which the
            # caller reports as a too-large step size
            loss = float(-np.mean(np.log(np.sum(probs * onehot, axis=1))))
        grad = Xb.T @ (probs - onehot) / n
        return loss, grad

    def fit(self, X, y, seed=None, n_classes=None):
        X, y, n_classes = check_training_set(X, y, n_classes)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        self.scale_ = std
        Xb = self._design(X)
        onehot = np.zeros((X.shape[0], n_classes))
        onehot[np.arange(X.shape[0]), y] = 1.0

        weights = np.zeros((X.shape[1] + 1, n_classes))
        for epoch in range(self.epochs):
            loss, grad = self.loss_and_grad(weights, Xb, onehot)
            if not np.isfinite(loss):
                raise ConfigError(
                    f"training loss became non-finite at epoch {epoch}; "
                    "use a smaller step_size"
                )
            weights -= self.step_size * grad
        self.weights_ = weights
        self.n_classes = n_classes
        self.n_features_in = X.shape[1]
        return self

    def _design(self, X: np.ndarray) -> np.ndarray:
        Xs = (X - self.mean_) / self.scale_
        return np.hstack([Xs, np.ones((X.shape[0], 1))])

    def _proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self._design(X) @ self.weights_)
