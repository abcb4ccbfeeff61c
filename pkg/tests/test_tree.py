import numpy as np
import pytest

from agmkit.errors import ConfigError, DataError
from agmkit.learners import DecisionTreeClassifier, TreeConfig, gini_impurity


def weighted_gini(y_left, y_right, n_classes):
    # written in the same canonical float shape the induction uses, so
    # exact-arithmetic ties remain exact ties here too
    total = len(y_left) + len(y_right)
    gini = []
    for side in (y_left, y_right):
        counts = np.bincount(side, minlength=n_classes)
        s = 0.0
        for c in range(n_classes):
            p = counts[c] / len(side)
            s += p * p
        gini.append(1.0 - s)
    return (len(y_left) * gini[0] + len(y_right) * gini[1]) / total


def brute_force_root_split(X, y, n_classes):
    """Enumerate every (feature, midpoint) pair; lowest weighted Gini wins.

    Features ascending, thresholds ascending, strict improvement only, so
    ties resolve to the lowest feature index then the lowest threshold.
    Returns (feature, threshold) or None when no split exists.
    """
    best = None
    best_score = np.inf
    for f in range(X.shape[1]):
        distinct = sorted(set(X[:, f]))
        for a, b in zip(distinct, distinct[1:]):
            thr = (a + b) / 2
            if thr >= b:
                thr = a
            mask = X[:, f] <= thr
            score = weighted_gini(y[mask], y[~mask], n_classes)
            if score < best_score:
                best_score = score
                best = (f, thr)
    return best


class TestGini:
    def test_balanced_pair(self):
        assert gini_impurity([0, 0, 1, 1]) == 0.5

    def test_pure(self):
        assert gini_impurity([2, 2, 2]) == 0.0


class TestDecisionTree:
    def test_pure_labels_single_leaf(self):
        X = np.array([[0.0], [1.0], [2.0]])
        tree = DecisionTreeClassifier().fit(X, [0, 0, 0], n_classes=2)
        assert tree.root_split is None
        assert np.array_equal(
            tree.predict_proba(X), np.tile([1.0, 0.0], (3, 1))
        )

    def test_boundary_threshold(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        tree = DecisionTreeClassifier().fit(X, y)
        feature, threshold = tree.root_split
        assert feature == 0
        assert 2.0 < threshold < 3.0
        assert np.array_equal(tree.predict(X), y)

    def test_root_split_matches_brute_force(self):
        # exhaustive-threshold induction vs independent enumeration on
        # every small instance we can draw: n <= 8, d <= 2
        rng = np.random.default_rng(1234)
        checked = 0
        for trial in range(400):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, 3))
            n_classes = int(rng.integers(2, 4))
            X = rng.integers(0, 5, size=(n, d)).astype(np.float64)
            y = rng.integers(0, n_classes, size=n).astype(np.int64)
            tree = DecisionTreeClassifier(TreeConfig()).fit(
                X, y, seed=trial, n_classes=n_classes
            )
            expected = brute_force_root_split(X, y, n_classes)
            if len(set(y)) == 1:
                assert tree.root_split is None
                continue
            if expected is None:
                assert tree.root_split is None
                continue
            assert tree.root_split is not None, (X, y)
            got_f, got_t = tree.root_split
            assert (got_f, got_t) == expected, (X.tolist(), y.tolist())
            checked += 1
        assert checked > 300

    def test_constant_features_mixed_labels(self):
        X = np.ones((4, 2))
        y = np.array([0, 1, 0, 1])
        tree = DecisionTreeClassifier().fit(X, y)
        assert tree.root_split is None
        assert np.allclose(tree.predict_proba(X), 0.5)

    def test_max_depth_zero_is_leaf(self):
        X = np.array([[0.0], [1.0]])
        tree = DecisionTreeClassifier(TreeConfig(max_depth=0)).fit(X, [0, 1])
        assert tree.root_split is None

    def test_min_samples_split(self):
        X = np.array([[0.0], [1.0], [2.0]])
        tree = DecisionTreeClassifier(TreeConfig(min_samples_split=4)).fit(
            X, [0, 1, 0]
        )
        assert tree.root_split is None

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 6))
        y = (X[:, 0] + X[:, 1] > 0).astype(np.int64)
        cfg = TreeConfig(n_candidate_features=2)
        a = DecisionTreeClassifier(cfg).fit(X, y, seed=99)
        b = DecisionTreeClassifier(cfg).fit(X, y, seed=99)
        probe = rng.normal(size=(20, 6))
        assert np.array_equal(a.predict_proba(probe), b.predict_proba(probe))

    def test_empty_input_rejected(self):
        with pytest.raises(DataError, match="empty"):
            DecisionTreeClassifier().fit(np.empty((0, 2)), [])

    def test_wrong_width_rejected(self):
        tree = DecisionTreeClassifier().fit(np.eye(2), [0, 1])
        with pytest.raises(DataError, match="columns"):
            tree.predict_proba(np.zeros((1, 3)))

    def test_random_threshold_style(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(80, 3))
        y = (X[:, 2] > 0).astype(np.int64)
        tree = DecisionTreeClassifier(TreeConfig(split_style="random")).fit(
            X, y, seed=4
        )
        assert (tree.predict(X) == y).mean() > 0.9

    def test_laplace_smoothing_flag(self):
        X = np.array([[0.0], [1.0]])
        tree = DecisionTreeClassifier(TreeConfig(max_depth=0, leaf_smoothing=1.0))
        tree.fit(X, [0, 0], n_classes=2)
        assert np.allclose(tree.predict_proba(X)[0], [0.75, 0.25])


class TestTreeConfig:
    def test_bad_min_samples_split(self):
        with pytest.raises(ConfigError):
            TreeConfig(min_samples_split=1)

    def test_bad_split_style(self):
        with pytest.raises(ConfigError):
            TreeConfig(split_style="weird")

    def test_candidates_exceed_dims(self):
        cfg = TreeConfig(n_candidate_features=5)
        with pytest.raises(ConfigError, match="exceeds"):
            cfg.resolve_candidates(3)

    def test_sqrt_rule(self):
        assert TreeConfig(n_candidate_features="sqrt").resolve_candidates(64) == 8
        assert TreeConfig(n_candidate_features="sqrt").resolve_candidates(2) == 1
