"""Single-file cascade persistence.

A saved model is a numpy ``.npz`` archive (zip of little-endian ``.npy``
members, so endianness and float encoding are fixed by the container):

* ``magic`` — the string "AGMCASCADE".
* ``format_version`` — integer, currently 1.
* ``manifest`` — JSON string holding the config snapshot, class names,
  accuracy history, and the per-layer structure (model kinds, scalar
  hyperparameters, and the key prefix of each model's arrays).
* one float64/int64 array per ``<prefix>/<name>`` entry referenced by
  the manifest: packed tree arrays for forests and boosters, weight and
  scaling vectors for linear models, rotation components per layer.

Loading validates the magic, the version, and every structural
invariant before returning; predictions after a round trip are
bit-identical because all learned state is stored verbatim.
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict

import numpy as np

from .cascade import AgmConfig, CascadeModel, LayerRecord
from .errors import CorruptModelError, UnsupportedVersionError
from .learners import (
    ExtraTreesClassifier,
    ForestConfig,
    GbdtConfig,
    GradientBoostingClassifier,
    RandomForestClassifier,
    TreeConfig,
)
from .pca import PcaTransform

__all__ = ["save_model", "load_model", "FORMAT_VERSION", "MAGIC"]

MAGIC = "AGMCASCADE"
FORMAT_VERSION = 1


def _tree_config_from_dict(d: dict) -> TreeConfig:
    return TreeConfig(**d)


def _pack_forest(model) -> tuple[dict, dict]:
    trees = model.trees_
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    for i, t in enumerate(trees):
        offsets[i + 1] = offsets[i] + len(t[0])
    arrays = {
        "feature": np.concatenate([t[0] for t in trees]),
        "threshold": np.concatenate([t[1] for t in trees]),
        "left": np.concatenate([t[2] for t in trees]),
        "right": np.concatenate([t[3] for t in trees]),
        "dist": np.concatenate([t[4] for t in trees]),
        "offsets": offsets,
    }
    cfg = asdict(model.config)
    meta = {
        "config": cfg,
        "n_classes": model.n_classes,
        "n_features_in": model.n_features_in,
    }
    return meta, arrays


def _unpack_forest(cls, meta: dict, arrays: dict):
    cfg = dict(meta["config"])
    cfg["tree"] = _tree_config_from_dict(cfg["tree"])
    model = cls(ForestConfig(**cfg))
    offsets = arrays["offsets"]
    trees = []
    for i in range(len(offsets) - 1):
        lo, hi = int(offsets[i]), int(offsets[i + 1])
        trees.append(
            (
                arrays["feature"][lo:hi],
                arrays["threshold"][lo:hi],
                arrays["left"][lo:hi],
                arrays["right"][lo:hi],
                arrays["dist"][lo:hi],
            )
        )
    model.trees_ = trees
    model.n_classes = int(meta["n_classes"])
    model.n_features_in = int(meta["n_features_in"])
    return model


def _pack_gbdt(model) -> tuple[dict, dict]:
    cfg = asdict(model.config)
    meta = {
        "config": cfg,
        "n_classes": model.n_classes,
        "n_features_in": model.n_features_in,
        "train_log_loss": list(model.train_log_loss_),
    }
    arrays = {
        "feature": model.feature_,
        "threshold": model.threshold_,
        "left": model.left_,
        "right": model.right_,
        "value": model.value_,
        "offsets": model.offsets_,
    }
    return meta, arrays


def _unpack_gbdt(meta: dict, arrays: dict):
    cfg = dict(meta["config"])
    cfg["tree"] = _tree_config_from_dict(cfg["tree"])
    model = GradientBoostingClassifier(GbdtConfig(**cfg))
    model.feature_ = arrays["feature"]
    model.threshold_ = arrays["threshold"]
    model.left_ = arrays["left"]
    model.right_ = arrays["right"]
    model.value_ = arrays["value"]
    model.offsets_ = arrays["offsets"]
    model.train_log_loss_ = [float(v) for v in meta["train_log_loss"]]
    model.n_classes = int(meta["n_classes"])
    model.n_features_in = int(meta["n_features_in"])
    return model


_PACKERS = {
    RandomForestClassifier: ("random-forest", _pack_forest),
    ExtraTreesClassifier: ("extra-trees", _pack_forest),
    GradientBoostingClassifier: ("gbdt", _pack_gbdt),
}

_UNPACKERS = {
    "random-forest": lambda meta, arrays: _unpack_forest(
        RandomForestClassifier, meta, arrays
    ),
    "extra-trees": lambda meta, arrays: _unpack_forest(
        ExtraTreesClassifier, meta, arrays
    ),
    "gbdt": _unpack_gbdt,
}


def save_model(model: CascadeModel, path) -> None:
    """Write a cascade to ``path`` in the versioned archive format."""
    entries: dict[str, np.ndarray] = {}
    layer_manifests = []
    for li, layer in enumerate(model.layers):
        model_manifests = []
        for mi, m in enumerate(layer.models):
            packer = _PACKERS.get(type(m))
            if packer is None:
                raise CorruptModelError(
                    f"cannot serialize model of type {type(m).__name__}"
                )
            kind, pack = packer
            meta, arrays = pack(m)
            prefix = f"layer{li}/model{mi}"
            for name, arr in arrays.items():
                entries[f"{prefix}/{name}"] = arr
            model_manifests.append(
                {"kind": kind, "prefix": prefix, "meta": meta}
            )
        if layer.pca is not None:
            prefix = f"layer{li}/pca"
            entries[f"{prefix}/mean"] = layer.pca.mean
            entries[f"{prefix}/components"] = layer.pca.components
            entries[f"{prefix}/eigenvalues"] = layer.pca.eigenvalues
        layer_manifests.append(
            {
                "kinds": list(layer.kinds),
                "expected_input_width": layer.expected_input_width,
                "val_accuracy": layer.val_accuracy,
                "has_pca": layer.pca is not None,
                "models": model_manifests,
            }
        )
    manifest = {
        "config": model.config.to_dict(),
        "class_names": list(model.class_names),
        "n_features_in": model.n_features_in,
        "acc_history": list(model.acc_history),
        "stop_reason": model.stop_reason,
        "layers": layer_manifests,
    }
    with open(path, "wb") as fh:  # keep the exact filename (no .npz suffixing)
        np.savez_compressed(
            fh,
            magic=np.asarray(MAGIC),
            format_version=np.asarray(FORMAT_VERSION, dtype=np.int64),
            manifest=np.asarray(json.dumps(manifest)),
            **entries,
        )


def load_model(path) -> CascadeModel:
    """Read a cascade archive, validating format and invariants."""
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError, zipfile.BadZipFile, io.UnsupportedOperation) as e:
        raise CorruptModelError(f"cannot read model file {path}: {e}") from e
    try:
        with archive:
            names = set(archive.files)
            if "magic" not in names or str(archive["magic"]) != MAGIC:
                raise CorruptModelError(f"{path} is not a cascade model file")
            if "format_version" not in names or "manifest" not in names:
                raise CorruptModelError(f"{path} is missing header entries")
            version = int(archive["format_version"])
            if version != FORMAT_VERSION:
                raise UnsupportedVersionError(
                    f"{path} uses format version {version}; "
                    f"this build reads version {FORMAT_VERSION}"
                )
            manifest = json.loads(str(archive["manifest"]))
            config = AgmConfig.from_dict(manifest["config"])
            layers = []
            for li, lm in enumerate(manifest["layers"]):
                models = []
                for mm in lm["models"]:
                    unpack = _UNPACKERS.get(mm["kind"])
                    if unpack is None:
                        raise CorruptModelError(
                            f"unknown model kind {mm['kind']!r}"
                        )
                    prefix = mm["prefix"]
                    arrays = {}
                    for name in ("feature", "threshold", "left", "right"):
                        arrays[name] = archive[f"{prefix}/{name}"]
                    for name in ("dist", "value", "offsets"):
                        key = f"{prefix}/{name}"
                        if key in names:
                            arrays[name] = archive[key]
                    models.append(unpack(mm["meta"], arrays))
                pca_t = None
                if lm["has_pca"]:
                    prefix = f"layer{li}/pca"
                    pca_t = PcaTransform(
                        mean=archive[f"{prefix}/mean"],
                        components=archive[f"{prefix}/components"],
                        eigenvalues=archive[f"{prefix}/eigenvalues"],
                    )
                layers.append(
                    LayerRecord(
                        models=tuple(models),
                        kinds=tuple(lm["kinds"]),
                        pca=pca_t,
                        expected_input_width=int(lm["expected_input_width"]),
                        val_accuracy=float(lm["val_accuracy"]),
                    )
                )
            return CascadeModel(
                layers=tuple(layers),
                config=config,
                class_names=tuple(manifest["class_names"]),
                n_features_in=int(manifest["n_features_in"]),
                acc_history=tuple(manifest["acc_history"]),
                stop_reason=str(manifest["stop_reason"]),
            )
    except (UnsupportedVersionError, CorruptModelError):
        raise
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as e:
        raise CorruptModelError(f"model file {path} is corrupt: {e}") from e
