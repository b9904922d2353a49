"""Report serialization: a versioned JSON document plus CSV tables.

Files written by :func:`emit_report`::

    report.json                    full results (schema below)
    f1_table.csv                   subject, baseline_f1, tuned_f1, tuned_std (+ Overall row)
    class_accuracy_by_subject.csv  subject, class, baseline_accuracy, tuned_accuracy
    class_accuracy_overall.csv     class, baseline_accuracy, tuned_accuracy
    roc/subject_<id>_<class>.csv   model, fpr, tpr   (optional)
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

REPORT_FORMAT = "gbmcal-cv-report"
REPORT_VERSION = 1


def _list(a):
    return np.asarray(a).tolist()


def evaluation_dict(ev, with_roc=True):
    out = {
        "confusion": _list(ev.confusion),
        "per_class_accuracy": _list(ev.per_class_accuracy),
        "f1_per_class": _list(ev.f1_per_class),
        "macro_f1": float(ev.macro_f1),
        "accuracy": float(ev.accuracy),
        "auc": _list(ev.auc),
    }
    if with_roc:
        out["roc"] = [{"fpr": _list(fpr), "tpr": _list(tpr)} for fpr, tpr in ev.roc]
    return out


def report_dict(report):
    base, tuned = report.baseline, report.tuned
    subjects = base.subjects
    baseline_subject_f1 = [base.per_subject[s].macro_f1 for s in subjects]
    tuned_subject_f1 = [tuned.per_subject[s].macro_f1 for s in tuned.subjects]
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "class_names": list(report.class_names),
        "subjects": subjects,
        "config": report.config,
        "config_hash": report.config_hash,
        "baseline": {
            "per_subject": {str(s): evaluation_dict(base.per_subject[s]) for s in subjects},
            "overall_pooled": evaluation_dict(base.overall),
            "overall_subject_mean_f1": float(np.mean(baseline_subject_f1)),
        },
        "tuned": {
            "repetitions": tuned.repetitions,
            "skipped_subjects": tuned.skipped,
            "per_subject": {str(s): evaluation_dict(tuned.per_subject[s]) for s in tuned.subjects},
            "per_subject_f1_std": {str(s): tuned.f1_std(s) for s in tuned.subjects},
            "per_subject_runs_f1": {
                str(s): [e.macro_f1 for e in tuned.per_subject_runs[s]] for s in tuned.subjects
            },
            "overall_pooled": evaluation_dict(tuned.overall),
            "overall_f1_std": tuned.f1_std(),
            "overall_runs_f1": [e.macro_f1 for e in tuned.overall_runs],
            "overall_subject_mean_f1": float(np.mean(tuned_subject_f1)),
        },
    }


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def f1_rows(doc):
    """Rows of the F1 table: one per subject plus ``Overall``."""
    b, t = doc["baseline"], doc["tuned"]
    rows = []
    for s in doc["subjects"]:
        key = str(s)
        tuned = t["per_subject"].get(key)
        rows.append((key, b["per_subject"][key]["macro_f1"],
                     tuned["macro_f1"] if tuned else None, t["per_subject_f1_std"].get(key)))
    rows.append(("Overall", b["overall_pooled"]["macro_f1"], t["overall_pooled"]["macro_f1"], t["overall_f1_std"]))
    return rows


def write_tables(doc, out_dir, roc=True):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    classes = doc["class_names"]
    b, t = doc["baseline"], doc["tuned"]
    written = []

    path = out / "f1_table.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("subject", "baseline_f1", "tuned_f1", "tuned_std"))
        for subject, bf, tf, sd in f1_rows(doc):
            w.writerow((subject, _fmt(bf), _fmt(tf), _fmt(sd)))
    written.append(path)

    path = out / "class_accuracy_by_subject.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("subject", "class", "baseline_accuracy", "tuned_accuracy"))
        for s in doc["subjects"]:
            key = str(s)
            tuned = t["per_subject"].get(key)
            for p, name in enumerate(classes):
                w.writerow((key, name, _fmt(b["per_subject"][key]["per_class_accuracy"][p]),
                            _fmt(tuned["per_class_accuracy"][p] if tuned else None)))
    written.append(path)

    path = out / "class_accuracy_overall.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("class", "baseline_accuracy", "tuned_accuracy"))
        for p, name in enumerate(classes):
            w.writerow((name, _fmt(b["overall_pooled"]["per_class_accuracy"][p]),
                        _fmt(t["overall_pooled"]["per_class_accuracy"][p])))
    written.append(path)

    if roc:
        roc_dir = out / "roc"
        roc_dir.mkdir(exist_ok=True)
        for s in doc["subjects"]:
            key = str(s)
            for p, name in enumerate(classes):
                path = roc_dir / f"subject_{key}_{name}.csv"
                with open(path, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(("model", "fpr", "tpr"))
                    for label, section in (("baseline", b), ("tuned", t)):
                        ev = section["per_subject"].get(key)
                        if ev is None:
                            continue
                        curve = ev["roc"][p]
                        for fpr, tpr in zip(curve["fpr"], curve["tpr"]):
                            w.writerow((label, repr(fpr), repr(tpr)))
                written.append(path)
    return written


def emit_report(report, out_dir, roc=True):
    """Write ``report.json`` and the CSV tables; return the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = report_dict(report)
    path = out / "report.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")
    return [path] + write_tables(doc, out, roc=roc)


def load_report(path):
    from ..errors import DataError

    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load report {path}: {exc}") from None
    if doc.get("format") != REPORT_FORMAT or doc.get("version") != REPORT_VERSION:
        raise DataError(f"{path}: not a version-{REPORT_VERSION} {REPORT_FORMAT} document")
    return doc
