"""Command-line entry point: ``gbmcal <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error. Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import tune, write_history_csv
from .config import load_config
from .errors import CalibrationError, ConfigError, DataError
from .evaluate import emit_report, load_report, run_cv, write_tables
from .evaluate.report import f1_rows
from .features import FeatureSet, WindowSpec, build_feature_set, read_feature_csv, write_feature_csv
from .gbm import load_model, save_model, train
from .ingest import load_segments

log = logging.getLogger("gbmcal")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# flag -> config key
_FLAG_KEYS = {
    "dataset": "run.dataset",
    "root": "ingest.root",
    "seed": "run.seed",
    "output_dir": "run.output_dir",
    "features": "run.features_path",
    "repetitions": "evaluate.repetitions",
    "n_rounds": "train.n_rounds",
    "learning_rate": "calibrate.learning_rate",
    "batch_size": "calibrate.batch_size",
    "max_epochs": "calibrate.max_epochs",
    "validation_fraction": "calibrate.validation_fraction",
    "patience": "calibrate.patience",
    "gradient_mode": "calibrate.gradient_mode",
}


def _add_common(p):
    p.add_argument("-c", "--config", help="INI-style config file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config value (repeatable)")
    p.add_argument("--dataset", choices=("dsads", "pamap2", "synth"))
    p.add_argument("--root", help="dataset root directory")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output-dir")
    p.add_argument("--features", help="feature CSV to use instead of ingesting a dataset")


def _add_calibration(p):
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--validation-fraction", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--gradient-mode", choices=("full_jacobian", "paper_diagonal"))


def build_parser():
    parser = _Parser(prog="gbmcal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("features", help="ingest a dataset and write features.csv + manifest.json")
    _add_common(p)

    p = sub.add_parser("train", help="train a GBM on all (or selected) subjects")
    _add_common(p)
    p.add_argument("--n-rounds", type=int)
    p.add_argument("--exclude-subject", type=int, action="append", default=[])
    p.add_argument("--model-out", help="model path (default <output-dir>/model.json)")

    p = sub.add_parser("calibrate", help="tune a model's weights on one user's feature file")
    _add_common(p)
    _add_calibration(p)
    p.add_argument("--model", required=True)
    p.add_argument("--user-data", required=True, help="feature CSV of the user")

    p = sub.add_parser("experiment", help="run baseline and tuned one-subject-out CV")
    _add_common(p)
    _add_calibration(p)
    p.add_argument("--n-rounds", type=int)
    p.add_argument("--repetitions", type=int)

    p = sub.add_parser("report", help="rewrite CSV tables from a report.json and print the F1 table")
    p.add_argument("report", help="path to report.json")
    p.add_argument("-o", "--output-dir", help="where to write tables (default: next to report.json)")
    return parser


def _resolve_config(args):
    overrides = []
    for key, dotted in _FLAG_KEYS.items():
        value = getattr(args, key, None)
        if value is not None:
            overrides.append((dotted, str(value)))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides.append((k, v))
    return load_config(args.config, overrides)


def _load_features(cfg):
    if cfg.features_path:
        return read_feature_csv(cfg.features_path)
    segments = load_segments(cfg.ingest, cfg.seed)
    if not segments:
        raise DataError("the dataset produced no segments for the configured activities")
    rate = segments[0].sample_rate_hz
    return build_feature_set(segments, WindowSpec.for_rate(rate, cfg.window_seconds))


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_features(cfg):
    features = _load_features(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_feature_csv(features, out / "features.csv")
    counts = features.counts()
    manifest = {
        "config_hash": cfg.hash(),
        "config": cfg.to_dict(),
        "n_instances": len(features),
        "subjects": features.subject_ids(),
        "classes": list(features.class_names()),
        "counts": {str(s): c for s, c in counts.items()},
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {len(features)} instances ({len(manifest['subjects'])} subjects, "
          f"{len(manifest['classes'])} classes) to {out / 'features.csv'}")
    return 0


def cmd_train(cfg, exclude=(), model_out=None):
    features = _load_features(cfg)
    if exclude:
        features = features.subset(~np.isin(features.subjects, list(exclude)))
    model = train(features, cfg.train)
    model.metadata = {"config_hash": cfg.hash(), "subjects": features.subject_ids()}
    path = Path(model_out) if model_out else Path(cfg.output_dir) / "model.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, path)
    print(f"wrote model ({model.n_rounds} rounds x {model.n_classes} classes) to {path}")
    return 0


def cmd_calibrate(cfg, model_path, user_path):
    model = load_model(model_path)
    user = read_feature_csv(user_path)
    unknown = sorted(set(user.labels.tolist()) - set(model.class_names))
    if unknown:
        raise CalibrationError(f"user data has classes {unknown} unknown to the model {list(model.class_names)}")
    result = tune(model, user, cfg.calibrate)
    tuned = result.apply(model)
    tuned.metadata = dict(model.metadata, calibration_config_hash=cfg.hash(),
                          selected_epoch=result.selected_epoch)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(tuned, out / "tuned_model.json")
    write_history_csv(result, out / "history.csv")
    print(f"selected epoch {result.selected_epoch} of {len(result.history)} "
          f"(validation accuracy {result.initial_val_accuracy:.4f} -> {result.best_val_accuracy:.4f}); "
          f"wrote {out / 'tuned_model.json'}")
    return 0


def _print_f1_table(doc, stream=None):
    stream = stream or sys.stdout
    print(f"{'subject':>8} {'baseline':>9} {'tuned':>9} {'std':>8}", file=stream)
    for subject, bf, tf, sd in f1_rows(doc):
        cells = [f"{v:9.4f}" if v is not None else f"{'-':>9}" for v in (bf, tf)]
        std = f"{sd:8.4f}" if sd is not None else f"{'-':>8}"
        print(f"{subject:>8} {cells[0]} {cells[1]} {std}", file=stream)


def cmd_experiment(cfg):
    features = _load_features(cfg)
    report = run_cv(features, cfg.train, cfg.calibrate, cfg.repetitions, cfg.seed,
                    config=cfg.to_dict(), config_hash=cfg.hash())
    paths = emit_report(report, cfg.output_dir, roc=cfg.roc_csv)
    _print_f1_table(load_report(paths[0]))
    print(f"wrote {len(paths)} files to {cfg.output_dir}")
    return 0


def cmd_report(report_path, output_dir=None):
    doc = load_report(report_path)
    out = Path(output_dir) if output_dir else Path(report_path).parent
    write_tables(doc, out)
    _print_f1_table(doc)
    return 0


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "exit_code": code, "message": str(message)}), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(1, "usage", exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args.report, args.output_dir)
        cfg = _resolve_config(args)
        if args.command == "features":
            return cmd_features(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.exclude_subject, args.model_out)
        if args.command == "calibrate":
            return cmd_calibrate(cfg, args.model, args.user_data)
        return cmd_experiment(cfg)
    except ConfigError as exc:
        return _fail(1, "config", exc)
    except DataError as exc:
        return _fail(2, "data", exc)
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        return _fail(3, "internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
