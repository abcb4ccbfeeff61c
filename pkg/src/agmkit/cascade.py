"""Adaptive-width, adaptive-depth stacking cascade.

Training carves an inner train/validation split off the training data,
then grows layers until validation accuracy stops improving. Each
layer's width is either fixed (v1, v2) or probed adaptively (v3) by
repeatedly adding a probe model's predictions and re-testing a
validation model. Between layers, predictions are concatenated to the
(possibly rotated) feature matrix; v2 and v3 additionally rotate the
augmented matrix with a freshly drawn principal-component count.

The width and depth decisions are factored into small pure classes
(:class:`WidthRule`, :class:`DepthStopper`) so they can be verified
exhaustively against straight-line simulations of the growth rules.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .data import Dataset, stratified_split
from .errors import ConfigError, CorruptModelError, DataError
from .learners import (
    ExtraTreesClassifier,
    ForestConfig,
    GbdtConfig,
    GradientBoostingClassifier,
    RandomForestClassifier,
    TreeConfig,
)
from .pca import PcaTransform, fit_pca, sample_k, transform
from .stacking import out_of_fold_probabilities

__all__ = [
    "LearnerSpec",
    "parse_learner_spec",
    "default_base_model_set",
    "AgmConfig",
    "LayerRecord",
    "CascadeModel",
    "WidthProbeState",
    "WidthRule",
    "DepthStopper",
    "augment_features",
    "layer_vote",
    "determine_width",
    "inner_split",
    "fit_cascade",
]

_SEED_BOUND = 2**63


@dataclass(frozen=True)
class LearnerSpec:
    """A recipe for one base learner kind, e.g. ``random-forest-100``."""

    kind: str
    size: int

    _BUILDERS = {
        "random-forest": lambda size: RandomForestClassifier(
            ForestConfig(n_trees=size)
        ),
        "extra-trees": lambda size: ExtraTreesClassifier(
            ForestConfig(
                n_trees=size,
                tree=TreeConfig(n_candidate_features="sqrt", split_style="random"),
                bootstrap=False,
            )
        ),
        "gbdt": lambda size: GradientBoostingClassifier(GbdtConfig(n_rounds=size)),
    }

    def __post_init__(self):
        if self.kind not in self._BUILDERS:
            raise ConfigError(
                f"unknown learner kind {self.kind!r}; "
                f"expected one of {sorted(self._BUILDERS)}"
            )
        if self.size < 1:
            raise ConfigError(f"learner size must be >= 1, got {self.size}")

    @property
    def label(self) -> str:
        return f"{self.kind}-{self.size}"

    def create(self):
        return self._BUILDERS[self.kind](self.size)


def parse_learner_spec(text: str) -> LearnerSpec:
    """Parse ``kind-size`` strings such as ``gbdt-100``."""
    head, sep, tail = text.strip().rpartition("-")
    if not sep or not tail.isdigit():
        raise ConfigError(f"cannot parse learner spec {text!r}: want kind-size")
    return LearnerSpec(head, int(tail))


def default_base_model_set() -> tuple[LearnerSpec, ...]:
    return (
        LearnerSpec("random-forest", 100),
        LearnerSpec("gbdt", 100),
        LearnerSpec("extra-trees", 100),
    )


_VERSIONS = ("v1", "v2", "v3")


@dataclass(frozen=True)
class AgmConfig:
    """Cascade configuration snapshot.

    v1: fixed width, no rotation. v2: fixed width plus rotation.
    v3: adaptive width plus rotation. ``eval_on`` and ``global_acc_w``
    are fidelity switches for the literal pseudocode readings; defaults
    follow the leak-free interpretation.
    """

    version: str = "v3"
    fixed_width: int = 4
    patience: int = 3
    base_model_set: tuple[LearnerSpec, ...] = field(
        default_factory=default_base_model_set
    )
    probe_model: LearnerSpec = field(
        default_factory=lambda: LearnerSpec("random-forest", 100)
    )
    val_model: LearnerSpec = field(
        default_factory=lambda: LearnerSpec("random-forest", 100)
    )
    val_fraction: float = 0.2
    feature_mode: str = "probability"
    pca_fit: str = "train"
    max_layers: int = 16
    max_width: int = 16
    seed: int = 0
    eval_on: str = "val"
    global_acc_w: bool = False
    probe_oof_folds: int = 0

    def __post_init__(self):
        object.__setattr__(self, "base_model_set", tuple(self.base_model_set))
        if self.version not in _VERSIONS:
            raise ConfigError(f"unknown version {self.version!r}")
        if self.fixed_width < 1:
            raise ConfigError("fixed_width must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if not self.base_model_set:
            raise ConfigError("base_model_set must not be empty")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must be in (0, 1)")
        if self.feature_mode not in ("probability", "label"):
            raise ConfigError(f"unknown feature_mode {self.feature_mode!r}")
        if self.pca_fit not in ("train", "joint"):
            raise ConfigError(f"unknown pca_fit {self.pca_fit!r}")
        if self.max_layers < 1 or self.max_width < 1:
            raise ConfigError("max_layers and max_width must be >= 1")
        if self.eval_on not in ("val", "train"):
            raise ConfigError(f"unknown eval_on {self.eval_on!r}")
        if self.probe_oof_folds not in (0,) and self.probe_oof_folds < 2:
            raise ConfigError("probe_oof_folds must be 0 or >= 2")

    @property
    def use_pca(self) -> bool:
        return self.version in ("v2", "v3")

    @property
    def adaptive_width(self) -> bool:
        return self.version == "v3"

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "fixed_width": self.fixed_width,
            "patience": self.patience,
            "base_model_set": [s.label for s in self.base_model_set],
            "probe_model": self.probe_model.label,
            "val_model": self.val_model.label,
            "val_fraction": self.val_fraction,
            "feature_mode": self.feature_mode,
            "pca_fit": self.pca_fit,
            "max_layers": self.max_layers,
            "max_width": self.max_width,
            "seed": self.seed,
            "eval_on": self.eval_on,
            "global_acc_w": self.global_acc_w,
            "probe_oof_folds": self.probe_oof_folds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgmConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("probe_model", "val_model"):
            if key in kwargs and isinstance(kwargs[key], str):
                kwargs[key] = parse_learner_spec(kwargs[key])
        if "base_model_set" in kwargs:
            kwargs["base_model_set"] = tuple(
                parse_learner_spec(s) if isinstance(s, str) else s
                for s in kwargs["base_model_set"]
            )
        return cls(**kwargs)


@dataclass
class WidthProbeState:
    """Running best probe accuracy, shared across layers in global mode."""

    best_acc: float = 0.0
    width: int = 0


class WidthRule:
    """Width counting rule: accept while accuracy strictly improves.

    One accepted offer == one useful probe model. The final width is the
    number of accepted offers, floored at one and capped.
    """

    def __init__(self, cap: int, best_acc: float = 0.0):
        self.cap = cap
        self.best_acc = best_acc
        self.accepted = 0

    def wants_more(self) -> bool:
        return self.accepted < self.cap

    def offer(self, acc: float) -> bool:
        if acc > self.best_acc:
            self.best_acc = acc
            self.accepted += 1
            return True
        return False

    @property
    def width(self) -> int:
        return max(self.accepted, 1)


class DepthStopper:
    """Depth growth rule over per-layer accuracies.

    A strict drop versus the previous layer stops growth immediately; an
    exact tie burns one unit of patience (patience never regenerates);
    the layer cap always stops. ``offer`` returns the stop reason or
    None to continue.
    """

    def __init__(self, patience: int, max_layers: int):
        self.patience_left = patience
        self.max_layers = max_layers
        self.history: list[float] = []

    def offer(self, acc: float) -> str | None:
        self.history.append(acc)
        n = len(self.history)
        if n > 1:
            prev = self.history[-2]
            if acc < prev:
                return "drop"
            if acc == prev:
                self.patience_left -= 1
                if self.patience_left == 0:
                    return "patience"
        if n >= self.max_layers:
            return "cap"
        return None


def augment_features(X, model_outputs, mode: str = "probability") -> np.ndarray:
    """Concatenate per-model prediction blocks after the feature columns."""
    X = np.asarray(X, dtype=np.float64)
    blocks = []
    for i, block in enumerate(model_outputs):
        block = np.asarray(block, dtype=np.float64)
        if block.ndim == 1:
            block = block.reshape(-1, 1)
        if block.shape[0] != X.shape[0]:
            raise DataError(
                f"prediction block {i} has {block.shape[0]} rows, "
                f"features have {X.shape[0]}"
            )
        if mode == "label" and block.shape[1] != 1:
            raise DataError(f"label-mode block {i} must have one column")
        blocks.append(block)
    if not blocks:
        return X
    return np.hstack([X] + blocks)


def layer_vote(blocks) -> tuple[np.ndarray, np.ndarray]:
    """Soft vote: average the probability blocks and take the argmax.

    Ties resolve to the lowest class id. Returns (labels, mean_proba).
    """
    if not blocks:
        raise DataError("cannot vote over zero blocks")
    first = np.asarray(blocks[0], dtype=np.float64)
    total = np.zeros_like(first)
    for i, block in enumerate(blocks):
        block = np.asarray(block, dtype=np.float64)
        if block.shape != first.shape:
            raise DataError(
                f"block {i} shape {block.shape} != block 0 shape {first.shape}"
            )
        total += block
    mean = total / len(blocks)
    return np.argmax(mean, axis=1), mean


def _as_xy(part) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(part, Dataset):
        return part.features, part.labels
    X, y = part
    return (
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
    )


def _augmentation_block(proba: np.ndarray, mode: str) -> np.ndarray:
    if mode == "probability":
        return proba
    return np.argmax(proba, axis=1).astype(np.float64).reshape(-1, 1)


def _vote_block(proba: np.ndarray, mode: str) -> np.ndarray:
    if mode == "probability":
        return proba
    labels = np.argmax(proba, axis=1)
    onehot = np.zeros_like(proba)
    onehot[np.arange(len(labels)), labels] = 1.0
    return onehot


def determine_width(
    train,
    val,
    probe_model: LearnerSpec,
    val_model: LearnerSpec,
    cap: int,
    rng: np.random.Generator,
    *,
    feature_mode: str = "probability",
    n_classes: int | None = None,
    state: WidthProbeState | None = None,
    oof_folds: int = 0,
) -> int:
    """Probe how many models this layer should hold.

    Iteratively trains the probe model, concatenates its predictions to
    both matrices, and re-tests the validation model; growth stops at the
    first non-improving accuracy. The probe models are discarded — only
    the count is returned (floored at one, capped at ``cap``).

    ``state`` carries the running best accuracy across calls for the
    global-best fidelity mode; by default every call starts from zero.
    """
    X_tr, y_tr = _as_xy(train)
    X_va, y_va = _as_xy(val)
    if X_tr.shape[1] != X_va.shape[1]:
        raise DataError(
            f"train has {X_tr.shape[1]} columns, val has {X_va.shape[1]}"
        )
    if n_classes is None:
        n_classes = int(max(y_tr.max(), y_va.max())) + 1
    rule = WidthRule(cap, best_acc=state.best_acc if state is not None else 0.0)

    while rule.wants_more():
        probe = probe_model.create()
        probe.fit(X_tr, y_tr, seed=int(rng.integers(_SEED_BOUND)),
                  n_classes=n_classes)
        if oof_folds >= 2:
            tr_proba = out_of_fold_probabilities(
                probe_model.create, X_tr, y_tr, oof_folds, rng, n_classes
            )
        else:
            tr_proba = probe.predict_proba(X_tr)
        va_proba = probe.predict_proba(X_va)
        X_tr = augment_features(
            X_tr, [_augmentation_block(tr_proba, feature_mode)], feature_mode
        )
        X_va = augment_features(
            X_va, [_augmentation_block(va_proba, feature_mode)], feature_mode
        )
        tester = val_model.create()
        tester.fit(X_tr, y_tr, seed=int(rng.integers(_SEED_BOUND)),
                   n_classes=n_classes)
        acc = float(np.mean(tester.predict(X_va) == y_va))
        if not rule.offer(acc):
            break

    if state is not None:
        state.best_acc = rule.best_acc
        state.width = rule.width
    return rule.width


@dataclass
class LayerRecord:
    """One trained cascade layer."""

    models: tuple
    kinds: tuple[str, ...]
    pca: PcaTransform | None
    expected_input_width: int  # augmented width entering the layer, pre-rotation
    val_accuracy: float

    def __post_init__(self):
        self.models = tuple(self.models)
        self.kinds = tuple(self.kinds)
        if not self.models:
            raise ConfigError("a layer must hold at least one model")
        if len(self.kinds) != len(self.models):
            raise ConfigError("one kind tag per model required")
        if not 0.0 <= self.val_accuracy <= 1.0:
            raise ConfigError(f"accuracy {self.val_accuracy} outside [0, 1]")

    @property
    def width(self) -> int:
        return len(self.models)

    @property
    def output_width(self) -> int:
        """Feature width the layer's models consumed (post-rotation)."""
        return self.pca.k if self.pca is not None else self.expected_input_width


@dataclass
class CascadeModel:
    """Retained cascade layers plus the full growth record."""

    layers: tuple[LayerRecord, ...]
    config: AgmConfig
    class_names: tuple[str, ...]
    n_features_in: int
    acc_history: tuple[float, ...]  # includes evaluated-then-pruned layers
    stop_reason: str

    def __post_init__(self):
        self.layers = tuple(self.layers)
        self.class_names = tuple(self.class_names)
        self.acc_history = tuple(self.acc_history)
        self.validate()

    def validate(self):
        if not self.layers:
            raise CorruptModelError("cascade has no layers")
        if len(self.layers) > len(self.acc_history):
            raise CorruptModelError("more layers than accuracy entries")
        if self.layers[-1].val_accuracy != max(self.acc_history):
            raise CorruptModelError(
                "final retained layer does not attain the best accuracy"
            )
        block_width = (
            len(self.class_names) if self.config.feature_mode == "probability" else 1
        )
        expect = self.n_features_in
        for i, layer in enumerate(self.layers):
            if layer.expected_input_width != expect:
                raise CorruptModelError(
                    f"layer {i} expects {layer.expected_input_width} input "
                    f"columns; replay arithmetic gives {expect}"
                )
            if layer.pca is not None and layer.pca.d != expect:
                raise CorruptModelError(f"layer {i} rotation width mismatch")
            expect = layer.output_width + layer.width * block_width

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_widths(self) -> tuple[int, ...]:
        return tuple(layer.width for layer in self.layers)

    def _replay_final_probas(self, X: np.ndarray) -> list[np.ndarray]:
        """Run every retained layer and return the last layer's blocks."""
        mode = self.config.feature_mode
        current = X
        probas: list[np.ndarray] = []
        for i, layer in enumerate(self.layers):
            if i > 0:
                current = augment_features(
                    current, [_augmentation_block(p, mode) for p in probas], mode
                )
            if current.shape[1] != layer.expected_input_width:
                raise CorruptModelError(
                    f"layer {i} expected {layer.expected_input_width} columns, "
                    f"replay produced {current.shape[1]}"
                )
            if layer.pca is not None:
                current = transform(layer.pca, current)
            probas = [m.predict_proba(current) for m in layer.models]
        return probas

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in:
            raise DataError(
                f"input has {X.shape[1] if X.ndim == 2 else '?'} columns, "
                f"cascade expects {self.n_features_in}"
            )
        probas = self._replay_final_probas(X)
        mode = self.config.feature_mode
        _, mean = layer_vote([_vote_block(p, mode) for p in probas])
        return mean

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def predict_labels(self, X) -> list[str]:
        return [self.class_names[i] for i in self.predict(X)]


def inner_split(train: Dataset, config: AgmConfig):
    """The deterministic inner train/validation partition used in fitting.

    Exposed so callers can reproduce the validation rows a fitted
    cascade's recorded accuracies refer to.
    """
    split_ss = np.random.SeedSequence(config.seed).spawn(2)[0]
    split_seed = int(split_ss.generate_state(1, dtype=np.uint64)[0] % _SEED_BOUND)
    return stratified_split(train, config.val_fraction, split_seed)


def fit_cascade(train: Dataset, config: AgmConfig) -> CascadeModel:
    """Grow a cascade on ``train`` and prune it to its best prefix.

    Growth stops on a strict validation-accuracy drop, on exhausted
    patience over exact ties, or at the layer cap; trailing layers after
    the earliest accuracy maximum are then discarded.
    """
    layers_root = np.random.SeedSequence(config.seed).spawn(2)[1]
    pair = inner_split(train, config)
    y_tr = pair.train.labels
    y_va = pair.holdout.labels
    n_classes = train.n_classes
    mode = config.feature_mode

    cur_tr = pair.train.features
    cur_va = pair.holdout.features
    prev_tr_probas: list[np.ndarray] = []
    prev_va_probas: list[np.ndarray] = []

    stopper = DepthStopper(config.patience, config.max_layers)
    probe_state = WidthProbeState()
    layers: list[LayerRecord] = []
    stop_reason = None

    while stop_reason is None:
        layer_ss = layers_root.spawn(1)[0]
        probe_ss, kind_ss, pca_ss, models_ss = layer_ss.spawn(4)

        # Width first, on the pre-augmentation matrices: the probe sees the
        # features exactly as the previous layer's models saw them.
        if config.adaptive_width:
            width = determine_width(
                (cur_tr, y_tr),
                (cur_va, y_va),
                config.probe_model,
                config.val_model,
                config.max_width,
                np.random.default_rng(probe_ss),
                feature_mode=mode,
                n_classes=n_classes,
                state=probe_state if config.global_acc_w else None,
                oof_folds=config.probe_oof_folds,
            )
        else:
            width = min(config.fixed_width, config.max_width)

        if layers:
            cur_tr = augment_features(
                cur_tr, [_augmentation_block(p, mode) for p in prev_tr_probas], mode
            )
            cur_va = augment_features(
                cur_va, [_augmentation_block(p, mode) for p in prev_va_probas], mode
            )
        expected_input_width = cur_tr.shape[1]

        pca_t = None
        if layers and config.use_pca:
            k = sample_k(cur_tr.shape[1], np.random.default_rng(pca_ss))
            fit_matrix = (
                cur_tr
                if config.pca_fit == "train"
                else np.vstack([cur_tr, cur_va])
            )
            pca_t = fit_pca(fit_matrix, k)
            cur_tr = transform(pca_t, cur_tr)
            cur_va = transform(pca_t, cur_va)

        kind_rng = np.random.default_rng(kind_ss)
        model_seeds = models_ss.generate_state(width, dtype=np.uint64)
        models, kinds = [], []
        tr_probas, va_probas = [], []
        for j in range(width):
            spec = config.base_model_set[
                int(kind_rng.integers(0, len(config.base_model_set)))
            ]
            model = spec.create()
            model.fit(
                cur_tr, y_tr, seed=int(model_seeds[j] % _SEED_BOUND),
                n_classes=n_classes,
            )
            models.append(model)
            kinds.append(spec.label)
            tr_probas.append(model.predict_proba(cur_tr))
            va_probas.append(model.predict_proba(cur_va))

        if config.eval_on == "val":
            eval_probas, eval_y = va_probas, y_va
        else:
            eval_probas, eval_y = tr_probas, y_tr
        votes, _ = layer_vote([_vote_block(p, mode) for p in eval_probas])
        acc = float(np.mean(votes == eval_y))

        layers.append(
            LayerRecord(
                models=tuple(models),
                kinds=tuple(kinds),
                pca=pca_t,
                expected_input_width=expected_input_width,
                val_accuracy=acc,
            )
        )
        stop_reason = stopper.offer(acc)
        prev_tr_probas, prev_va_probas = tr_probas, va_probas

    history = tuple(stopper.history)
    best = int(np.argmax(history))
    return CascadeModel(
        layers=tuple(layers[: best + 1]),
        config=config,
        class_names=train.class_names,
        n_features_in=train.n_features,
        acc_history=history,
        stop_reason=stop_reason,
    )
