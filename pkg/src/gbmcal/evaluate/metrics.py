"""Classification metrics: per-class recall, macro F1, one-vs-rest ROC and AUC."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)


def confusion_matrix(y_true, y_pred, n_classes):
    """Counts with true classes on rows and predicted classes on columns."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def _ratio(num, den):
    return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)


def per_class_accuracy(cm):
    """Recall of each class; a class with no true instances scores 0."""
    cm = np.asarray(cm, dtype=np.float64)
    support = cm.sum(axis=1)
    if np.any(support == 0):
        log.warning("class(es) %s have no instances; their accuracy is reported as 0",
                    np.flatnonzero(support == 0).tolist())
    return _ratio(np.diag(cm), support)


def f1_per_class(cm):
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    precision = _ratio(tp, cm.sum(axis=0))
    recall = _ratio(tp, cm.sum(axis=1))
    return _ratio(2 * precision * recall, precision + recall)


def macro_f1(cm):
    return float(np.mean(f1_per_class(cm)))


def roc_points(scores, positive):
    """One-vs-rest ROC curve as ``(fpr, tpr)`` arrays from (0, 0) to (1, 1).

    One point per distinct score threshold, visited from high to low, so
    tied scores move the curve diagonally.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = positive[order]
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    last_of_group = np.r_[s[1:] != s[:-1], True] if s.size else np.array([], dtype=bool)
    tp = np.r_[0, tp[last_of_group]]
    fp = np.r_[0, fp[last_of_group]]
    tpr = tp / n_pos if n_pos else np.zeros_like(tp, dtype=np.float64)
    fpr = fp / n_neg if n_neg else np.zeros_like(fp, dtype=np.float64)
    return fpr.astype(np.float64), tpr.astype(np.float64)


def auc_trapezoid(fpr, tpr):
    fpr = np.asarray(fpr, dtype=np.float64)
    tpr = np.asarray(tpr, dtype=np.float64)
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))


def roc_auc(scores, positive):
    """Area under the ROC curve; 0 (with a warning) if either side is empty.

    Works in integer counts and divides once at the end, which makes the
    result equal the pairwise win probability (ties counted half) to within
    rounding of a single division.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        log.warning("ROC AUC undefined without both positives and negatives; reporting 0")
        return 0.0
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = positive[order]
    last = np.r_[s[1:] != s[:-1], True]
    tp = np.r_[0, np.cumsum(pos)[last]].astype(np.int64)
    fp = np.r_[0, np.cumsum(~pos)[last]].astype(np.int64)
    # twice the trapezoid area in count units: sum dfp * (tp_i + tp_{i-1})
    twice = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    return twice / (2 * n_pos * n_neg)


def summarize(y_true, proba, n_classes):
    """All metrics for one set of predictions.

    ``proba`` is (N, l); predictions are its row-wise argmax (lowest index on
    ties).
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    if y_true.size == 0:
        raise ValueError("cannot compute metrics on an empty prediction set")
    y_pred = np.argmax(proba, axis=1)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    rocs, aucs = [], []
    for p in range(n_classes):
        positive = y_true == p
        rocs.append(roc_points(proba[:, p], positive))
        aucs.append(roc_auc(proba[:, p], positive))
    return {
        "confusion": cm,
        "per_class_accuracy": per_class_accuracy(cm),
        "f1_per_class": f1_per_class(cm),
        "macro_f1": macro_f1(cm),
        "accuracy": float(np.trace(cm) / cm.sum()),
        "roc": rocs,
        "auc": np.array(aucs),
    }
