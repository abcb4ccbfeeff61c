"""In-house base learners behind one fit/predict_proba contract."""

from .base import ClassifierMixin
from .boosting import GbdtConfig, GradientBoostingClassifier, softmax
from .forest import ExtraTreesClassifier, ForestConfig, RandomForestClassifier
from .linear import SoftmaxRegression
from .tree import DecisionTreeClassifier, TreeConfig, gini_impurity

__all__ = [
    "ClassifierMixin",
    "DecisionTreeClassifier",
    "ExtraTreesClassifier",
    "ForestConfig",
    "GbdtConfig",
    "GradientBoostingClassifier",
    "RandomForestClassifier",
    "SoftmaxRegression",
    "TreeConfig",
    "gini_impurity",
    "softmax",
]
