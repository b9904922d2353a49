"""One-subject-out cross-validation for baseline and calibrated models.

Baseline: for each subject, train on every other subject and predict the
held-out subject. Tuned: the held-out subject's instances are split into two
stratified halves A and B; the fold model is calibrated on A and predicts B,
then calibrated on B (starting again from the trained weights) and predicts
A. The split is repeated with different seeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..calibrate import CalibrationConfig, stratified_split, tune
from ..errors import CalibrationError, ConfigError, FoldError
from ..features import FeatureSet
from ..gbm import GbmModel, TrainConfig, softmax, train, weighted_scores
from .metrics import summarize

log = logging.getLogger(__name__)


def shifted_mean(values):
    """Mean computed as ``v0 + mean(v - v0)``; exact when all values are equal."""
    v = np.asarray(values, dtype=np.float64)
    return v[0] + np.mean(v - v[0], axis=0)


def shifted_std(values):
    """Sample standard deviation (ddof=1); 0 for a single value or equal values."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] < 2:
        return np.zeros_like(v[0])
    d = v - v[0]
    d = d - np.mean(d, axis=0)
    return np.sqrt(np.sum(d * d, axis=0) / (v.shape[0] - 1))


@dataclass
class Evaluation:
    """Metrics of one prediction set (one subject, or all subjects pooled)."""

    confusion: np.ndarray
    per_class_accuracy: np.ndarray
    f1_per_class: np.ndarray
    macro_f1: float
    accuracy: float
    auc: np.ndarray
    roc: list = field(default_factory=list, repr=False)

    @classmethod
    def from_predictions(cls, y_true, proba, n_classes):
        s = summarize(y_true, proba, n_classes)
        return cls(s["confusion"], s["per_class_accuracy"], s["f1_per_class"], s["macro_f1"],
                   s["accuracy"], s["auc"], s["roc"])

    @classmethod
    def mean_of(cls, evals):
        """Average over repetitions; the ROC curve of the first is kept."""
        return cls(
            confusion=shifted_mean([e.confusion for e in evals]),
            per_class_accuracy=shifted_mean([e.per_class_accuracy for e in evals]),
            f1_per_class=shifted_mean([e.f1_per_class for e in evals]),
            macro_f1=float(shifted_mean([e.macro_f1 for e in evals])),
            accuracy=float(shifted_mean([e.accuracy for e in evals])),
            auc=shifted_mean([e.auc for e in evals]),
            roc=evals[0].roc,
        )


@dataclass
class Trace:
    """Held-out labels and probabilities, aligned with instance ids."""

    ids: np.ndarray
    y_true: np.ndarray
    proba: np.ndarray


@dataclass
class Fold:
    held_out_subject: int
    train_subjects: list[int]
    model: GbmModel
    train_ids: np.ndarray
    test: FeatureSet
    phi: np.ndarray  # decision outputs of the held-out instances


@dataclass
class BaselineCv:
    class_names: tuple[str, ...]
    subjects: list[int]
    per_subject: dict[int, Evaluation]
    overall: Evaluation
    traces: dict[int, Trace]
    folds: dict[int, Fold]


@dataclass
class TunedCv:
    class_names: tuple[str, ...]
    subjects: list[int]
    repetitions: int
    per_subject: dict[int, Evaluation]  # mean over repetitions
    per_subject_runs: dict[int, list[Evaluation]]
    overall: Evaluation
    overall_runs: list[Evaluation]
    skipped: list[int]
    audit: list[dict] = field(default_factory=list, repr=False)

    def f1_std(self, subject=None):
        runs = self.overall_runs if subject is None else self.per_subject_runs[subject]
        return float(shifted_std([e.macro_f1 for e in runs]))


def _check_subjects(data):
    subjects = data.subject_ids()
    if len(subjects) < 2:
        raise FoldError(f"one-subject-out CV needs at least 2 subjects, found {subjects}")
    return subjects


def build_fold(data: FeatureSet, subject, train_config, class_names) -> Fold:
    held = data.subjects == subject
    train_set = data.subset(~held)
    missing = sorted(set(class_names) - set(train_set.labels.tolist()))
    if missing:
        raise FoldError(f"class(es) {missing} absent from the training data of the fold holding out subject {subject}")
    model = train(train_set, train_config, class_names)
    test = data.subset(held)
    return Fold(subject, train_set.subject_ids(), model, train_set.ids, test, model.phi(test.X))


def build_folds(data, train_config=None, class_names=None):
    train_config = (train_config or TrainConfig()).validate()
    subjects = _check_subjects(data)
    class_names = tuple(class_names or data.class_names())
    return {s: build_fold(data, s, train_config, class_names) for s in subjects}


def run_baseline_cv(data: FeatureSet, train_config=None, class_names=None, folds=None) -> BaselineCv:
    subjects = _check_subjects(data)
    class_names = tuple(class_names or data.class_names())
    folds = folds or build_folds(data, train_config, class_names)
    l = len(class_names)
    per_subject, traces = {}, {}
    for s in subjects:
        fold = folds[s]
        proba = softmax(weighted_scores(fold.model.init_scores, fold.model.weights, fold.phi))
        y = fold.test.label_indices(class_names)
        traces[s] = Trace(fold.test.ids, y, proba)
        per_subject[s] = Evaluation.from_predictions(y, proba, l)
    overall = Evaluation.from_predictions(
        np.concatenate([traces[s].y_true for s in subjects]),
        np.vstack([traces[s].proba for s in subjects]),
        l,
    )
    return BaselineCv(class_names, subjects, per_subject, overall, traces, folds)


def _derived_seed(*parts):
    return int(np.random.default_rng(list(parts)).integers(2**31 - 1))


def run_tuned_cv(data: FeatureSet, train_config=None, calib_config=None, repetitions=5, seed=0,
                 class_names=None, folds=None) -> TunedCv:
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    calib_config = (calib_config or CalibrationConfig()).validate()
    subjects = _check_subjects(data)
    class_names = tuple(class_names or data.class_names())
    folds = folds or build_folds(data, train_config, class_names)
    l = len(class_names)

    runs = {}
    pooled = [[] for _ in range(repetitions)]
    skipped, audit = [], []
    for s in subjects:
        fold = folds[s]
        model = fold.model
        y = fold.test.label_indices(class_names)
        subject_runs = []
        try:
            for rep in range(repetitions):
                rng = np.random.default_rng([seed, rep, s])
                set_a, set_b = stratified_split(y, 0.5, rng)
                if set_a.size == 0 or set_b.size == 0:
                    raise CalibrationError(f"subject {s} is too small to split into sets A and B")
                proba = np.empty((y.size, l))
                for half, (tune_idx, test_idx) in enumerate(((set_a, set_b), (set_b, set_a))):
                    cfg = replace(calib_config, seed=_derived_seed(calib_config.seed, seed, s, rep, half))
                    result = tune(model, fold.test.subset(tune_idx), cfg)
                    proba[test_idx] = softmax(weighted_scores(model.init_scores, result.weights, fold.phi[test_idx]))
                    audit.append({
                        "subject": s,
                        "repetition": rep,
                        "half": "AB"[half],
                        "model_train_ids": fold.train_ids,
                        "tune_ids": fold.test.ids[tune_idx],
                        "predicted_ids": fold.test.ids[test_idx],
                    })
                subject_runs.append(proba)
        except (CalibrationError, ConfigError) as exc:
            log.warning("skipping subject %s in tuned CV: %s", s, exc)
            skipped.append(s)
            audit = [a for a in audit if a["subject"] != s]
            continue
        runs[s] = [Evaluation.from_predictions(y, proba, l) for proba in subject_runs]
        for rep, proba in enumerate(subject_runs):
            pooled[rep].append((y, proba))

    kept = [s for s in subjects if s not in skipped]
    if not kept:
        raise FoldError("no subject could be evaluated in tuned CV")
    overall_runs = [
        Evaluation.from_predictions(np.concatenate([p[0] for p in rep]), np.vstack([p[1] for p in rep]), l)
        for rep in pooled
    ]
    return TunedCv(
        class_names=class_names,
        subjects=kept,
        repetitions=repetitions,
        per_subject={s: Evaluation.mean_of(runs[s]) for s in kept},
        per_subject_runs=runs,
        overall=Evaluation.mean_of(overall_runs),
        overall_runs=overall_runs,
        skipped=skipped,
        audit=audit,
    )


@dataclass
class CvReport:
    class_names: tuple[str, ...]
    baseline: BaselineCv
    tuned: TunedCv
    config: dict = field(default_factory=dict)
    config_hash: str = ""


def run_cv(data: FeatureSet, train_config=None, calib_config=None, repetitions=5, seed=0,
           class_names=None, config=None, config_hash="") -> CvReport:
    """Baseline and tuned CV sharing one trained model per fold."""
    class_names = tuple(class_names or data.class_names())
    folds = build_folds(data, train_config, class_names)
    baseline = run_baseline_cv(data, class_names=class_names, folds=folds)
    tuned = run_tuned_cv(data, train_config, calib_config, repetitions, seed, class_names, folds)
    return CvReport(class_names, baseline, tuned, config or {}, config_hash)
