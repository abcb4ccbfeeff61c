"""Adaptive stacking cascades for tabular classification.

The model grows in two directions: each layer's width (model count) can
be probed adaptively, and depth grows until held-out accuracy stops
improving. Between layers, model predictions are concatenated to the
feature matrix and optionally rotated onto a random number of principal
components. Base learners (random forest, extra-trees, boosted trees,
softmax regression) are implemented in-house behind one contract.
"""

from .bench import ExperimentSpec, Report, render_report, run_experiment
from .cascade import (
    AgmConfig,
    CascadeModel,
    LayerRecord,
    LearnerSpec,
    WidthProbeState,
    augment_features,
    determine_width,
    fit_cascade,
    layer_vote,
    parse_learner_spec,
)
from .data import (
    Dataset,
    SplitPair,
    class_proportions,
    encode_labels,
    load_csv,
    save_csv,
    stratified_split,
)
from .errors import (
    AgmError,
    ConfigError,
    CorruptModelError,
    DataError,
    ModelFormatError,
    UnsupportedVersionError,
)
from .model_io import load_model, save_model
from .pca import PcaTransform, fit_pca, sample_k, transform
from .stacking import TwoLayerStackingModel, fit_two_layer_stacking

__version__ = "0.1.0"

__all__ = [
    "AgmConfig",
    "AgmError",
    "CascadeModel",
    "ConfigError",
    "CorruptModelError",
    "DataError",
    "Dataset",
    "ExperimentSpec",
    "LayerRecord",
    "LearnerSpec",
    "ModelFormatError",
    "PcaTransform",
    "Report",
    "SplitPair",
    "TwoLayerStackingModel",
    "UnsupportedVersionError",
    "WidthProbeState",
    "augment_features",
    "class_proportions",
    "determine_width",
    "encode_labels",
    "fit_cascade",
    "fit_pca",
    "fit_two_layer_stacking",
    "layer_vote",
    "load_csv",
    "load_model",
    "parse_learner_spec",
    "render_report",
    "run_experiment",
    "sample_k",
    "save_csv",
    "save_model",
    "stratified_split",
    "transform",
]
