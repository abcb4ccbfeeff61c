import numpy as np
import pytest

from agmkit.data import Dataset
from agmkit.synth import make_gaussian_dataset


def onehot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def labels_with_accuracy(y, accuracy):
    """Copy of y with just enough leading entries flipped to hit ``accuracy``.

    ``accuracy * len(y)`` must be an integer so the result is exact.
    """
    y = np.asarray(y, dtype=np.int64)
    n_wrong = round((1.0 - accuracy) * len(y))
    assert abs(n_wrong - (1.0 - accuracy) * len(y)) < 1e-9, "inexact accuracy"
    n_classes = int(y.max()) + 1
    out = y.copy()
    out[:n_wrong] = (out[:n_wrong] + 1) % max(n_classes, 2)
    return out


class ScriptedClassifier:
    """Test double: ignores inputs, returns canned blocks keyed by row count."""

    def __init__(self, by_rows, n_classes):
        self.by_rows = {n: np.asarray(b, dtype=np.float64) for n, b in by_rows.items()}
        self.n_classes = n_classes
        self.n_features_in = 0

    def fit(self, X, y, seed=None, n_classes=None):
        self.n_features_in = X.shape[1]
        return self

    def predict_proba(self, X):
        return self.by_rows[len(X)].copy()

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)


class ScriptedSpec:
    """Learner-spec double handing out queued scripted classifiers."""

    label = "scripted"

    def __init__(self, classifiers):
        self.queue = list(classifiers)

    def create(self):
        return self.queue.pop(0)


@pytest.fixture(scope="session")
def digits_dataset():
    skd = pytest.importorskip("sklearn.datasets")
    d = skd.load_digits()
    return Dataset(
        d.data.astype(np.float64),
        d.target.astype(np.int64),
        [str(i) for i in range(10)],
        [f"f{j}" for j in range(64)],
    )


@pytest.fixture()
def blob3():
    """90 rows, 3 well-separated classes, 5 features."""
    return make_gaussian_dataset([30, 30, 30], 5, 6.0, 11, class_names=["a", "b", "c"])


@pytest.fixture()
def blob2_hard():
    """160 rows, 2 overlapping classes; nothing reaches perfect accuracy."""
    return make_gaussian_dataset([80, 80], 6, 1.6, 12)
