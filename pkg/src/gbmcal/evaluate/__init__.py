"""Cross-validation protocol, metrics and report output."""

from .cv import (
    BaselineCv,
    CvReport,
    Evaluation,
    Fold,
    TunedCv,
    build_folds,
    run_baseline_cv,
    run_cv,
    run_tuned_cv,
)
from .metrics import auc_trapezoid, confusion_matrix, f1_per_class, macro_f1, per_class_accuracy, roc_auc, roc_points
from .report import emit_report, load_report, report_dict, write_tables

__all__ = [
    "BaselineCv",
    "CvReport",
    "Evaluation",
    "Fold",
    "TunedCv",
    "auc_trapezoid",
    "build_folds",
    "confusion_matrix",
    "emit_report",
    "f1_per_class",
    "load_report",
    "macro_f1",
    "per_class_accuracy",
    "report_dict",
    "roc_auc",
    "roc_points",
    "run_baseline_cv",
    "run_cv",
    "run_tuned_cv",
    "write_tables",
]
