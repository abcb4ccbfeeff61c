"""Command-line entry point: train, predict, eval, split, bench.

Exit codes: 0 success, 1 usage error (bad flags or flag values), 2 data
error (unreadable CSVs, dimension mismatches, corrupt model files),
3 internal error. Stdout is for humans; file outputs are the
machine-readable surface.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .cascade import AgmConfig, fit_cascade, parse_learner_spec
from .data import (
    load_csv,
    load_features_csv,
    random_split,
    save_csv,
    stratified_split,
)
from .errors import AgmError, ConfigError, DataError, ModelFormatError
from .model_io import load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DATA_DIR_ENV = "AGMKIT_DATA_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_label_flags(p, required: bool):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--label", help="label column name (requires a header)")
    group.add_argument(
        "--label-index", type=int, help="zero-based label column index"
    )
    p.add_argument(
        "--no-header",
        action="store_true",
        help="treat the first CSV row as data, not column names",
    )


def _label_selector(args):
    if args.label is not None:
        if args.no_header:
            raise _UsageError("--label needs a header row; use --label-index")
        return args.label
    return args.label_index


def _add_config_flags(p):
    d = AgmConfig()
    p.add_argument("--version", choices=("v1", "v2", "v3"), default=d.version)
    p.add_argument("--width", type=int, default=d.fixed_width,
                   help="fixed per-layer model count for v1/v2")
    p.add_argument("--patience", type=int, default=d.patience,
                   help="equal-accuracy layers tolerated before stopping")
    p.add_argument("--base-models", default=None,
                   help="comma-separated learner specs, e.g. "
                        "random-forest-100,gbdt-100,extra-trees-100")
    p.add_argument("--probe-model", default=d.probe_model.label)
    p.add_argument("--val-model", default=d.val_model.label)
    p.add_argument("--val-fraction", type=float, default=d.val_fraction)
    p.add_argument("--feature-mode", choices=("probability", "label"),
                   default=d.feature_mode)
    p.add_argument("--pca-fit", choices=("train", "joint"), default=d.pca_fit)
    p.add_argument("--max-layers", type=int, default=d.max_layers)
    p.add_argument("--max-width", type=int, default=d.max_width)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--eval-on", choices=("val", "train"), default=d.eval_on)
    p.add_argument("--global-acc-w", action="store_true",
                   help="carry the width-probe best accuracy across layers")
    p.add_argument("--probe-oof-folds", type=int, default=d.probe_oof_folds,
                   help="0 for in-sample probe blocks, or a fold count >= 2")


def _config_from_args(args) -> AgmConfig:
    kwargs = dict(
        version=args.version,
        fixed_width=args.width,
        patience=args.patience,
        probe_model=parse_learner_spec(args.probe_model),
        val_model=parse_learner_spec(args.val_model),
        val_fraction=args.val_fraction,
        feature_mode=args.feature_mode,
        pca_fit=args.pca_fit,
        max_layers=args.max_layers,
        max_width=args.max_width,
        seed=args.seed,
        eval_on=args.eval_on,
        global_acc_w=args.global_acc_w,
        probe_oof_folds=args.probe_oof_folds,
    )
    if args.base_models:
        kwargs["base_model_set"] = tuple(
            parse_learner_spec(s) for s in args.base_models.split(",")
        )
    return AgmConfig(**kwargs)


def cmd_train(args) -> int:
    config = _config_from_args(args)
    ds = load_csv(args.data, _label_selector(args), has_header=not args.no_header)
    model = fit_cascade(ds, config)
    save_model(model, args.out)
    print(f"trained {config.version} cascade on {ds.n_samples} rows "
          f"({ds.n_features} features, {ds.n_classes} classes)")
    for i, layer in enumerate(model.layers):
        pca_note = f", pca k={layer.pca.k}" if layer.pca is not None else ""
        print(f"  layer {i}: width {layer.width} "
              f"[{', '.join(layer.kinds)}]{pca_note} "
              f"val acc {layer.val_accuracy:.4f}")
    pruned = len(model.acc_history) - model.n_layers
    print(f"accuracy history: "
          + " ".join(f"{a:.4f}" for a in model.acc_history)
          + (f" (pruned {pruned} trailing)" if pruned else ""))
    print(f"stopped: {model.stop_reason}; model written to {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    selector = args.label if args.label is not None else args.label_index
    if selector is not None:
        ds = load_csv(args.data, selector, has_header=not args.no_header)
        X = ds.features
    else:
        X, _ = load_features_csv(args.data, has_header=not args.no_header)
    if X.shape[1] != model.n_features_in:
        raise DataError(
            f"{args.data} has {X.shape[1]} feature columns, "
            f"model expects {model.n_features_in}"
        )
    proba = model.predict_proba(X)
    labels = np.argmax(proba, axis=1)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["prediction"]
        if args.proba:
            header += [f"proba_{name}" for name in model.class_names]
        writer.writerow(header)
        for i in range(len(labels)):
            row = [model.class_names[labels[i]]]
            if args.proba:
                row += [repr(float(v)) for v in proba[i]]
            writer.writerow(row)
    print(f"wrote {len(labels)} predictions to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = load_csv(args.data, _label_selector(args), has_header=not args.no_header)
    if ds.n_features != model.n_features_in:
        raise DataError(
            f"{args.data} has {ds.n_features} feature columns, "
            f"model expects {model.n_features_in}"
        )
    if tuple(ds.class_names) != tuple(model.class_names):
        raise DataError(
            f"label classes {list(ds.class_names)} do not match the model's "
            f"{list(model.class_names)}"
        )
    predicted = model.predict(ds.features)
    accuracy = float(np.mean(predicted == ds.labels))
    c = model.n_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    for t, p in zip(ds.labels, predicted):
        confusion[t, p] += 1
    print(f"accuracy {accuracy:.4f} on {ds.n_samples} rows")
    width = max(len(n) for n in model.class_names)
    print(f"confusion (rows true, columns predicted):")
    for i, name in enumerate(model.class_names):
        counts = " ".join(f"{confusion[i, j]:6d}" for j in range(c))
        print(f"  {name:<{width}} {counts}")
    if args.out:
        payload = {
            "accuracy": accuracy,
            "n_rows": ds.n_samples,
            "class_names": list(model.class_names),
            "confusion": confusion.tolist(),
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_split(args) -> int:
    selector = _label_selector(args)
    ds = load_csv(args.data, selector, has_header=not args.no_header)
    splitter = random_split if args.no_stratify else stratified_split
    pair = splitter(ds, args.fraction, args.seed)
    label_name = args.label if args.label is not None else "label"
    save_csv(pair.train, args.train_out, label_name)
    save_csv(pair.holdout, args.holdout_out, label_name)
    print(f"split {ds.n_samples} rows into {pair.train.n_samples} train / "
          f"{pair.holdout.n_samples} holdout (seed {args.seed})")
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = bench_mod.ExperimentSpec.from_file(args.spec)
    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV)
    report = bench_mod.run_experiment(spec, jobs=args.jobs, data_dir=data_dir)
    if report.load_errors:
        for name, err in sorted(report.load_errors.items()):
            print(f"warning: dataset {name} skipped: {err}", file=sys.stderr)
        if args.strict:
            raise DataError(
                f"{len(report.load_errors)} dataset(s) failed to load"
            )
    text = bench_mod.render_report(report, args.format)
    Path(args.out).write_text(text)
    print(bench_mod.render_report(report, "markdown"), end="")
    print(f"report written to {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="agmkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="fit a cascade and save it")
    p.add_argument("--data", required=True)
    _add_label_flags(p, required=True)
    p.add_argument("--out", required=True, help="model file to write")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict class names for a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--proba", action="store_true",
                   help="append per-class probability columns")
    _add_label_flags(p, required=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy and confusion counts")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _add_label_flags(p, required=True)
    p.add_argument("--out", help="optional JSON metrics file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="write train/holdout CSVs")
    p.add_argument("--data", required=True)
    _add_label_flags(p, required=True)
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--holdout-out", required=True)
    p.add_argument("--no-stratify", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("bench", help="run an experiment spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true",
                   help="fail if any dataset cannot be loaded")
    p.add_argument("--data-dir",
                   help=f"base for relative dataset paths "
                        f"(default: ${DATA_DIR_ENV})")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except AgmError as e:  # pragma: no cover
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # pragma: no cover
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
