"""Window segmentation and per-axis statistical features.

Each 1-second, non-overlapping window yields 18 features: for each axis
(x, then y, then z) the mean, population standard deviation, population
skewness, lag-1 autocorrelation, range and root mean square.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ingest.types import Activity

STATISTICS = ("mean", "std", "skew", "autocorr", "range", "rms")
AXES = ("ax", "ay", "az")
FEATURE_NAMES = tuple(f"{axis}_{stat}" for axis in AXES for stat in STATISTICS)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class WindowSpec:
    window_len: int
    overlap: int = 0

    def __post_init__(self):
        if self.window_len <= 0:
            raise ValueError("window_len must be positive")
        if self.overlap != 0:
            raise ValueError("only non-overlapping windows are supported")

    @classmethod
    def for_rate(cls, sample_rate_hz, seconds=1.0):
        return cls(int(round(sample_rate_hz * seconds)))


class RawWindow(NamedTuple):
    subject_id: int
    activity: Activity
    samples: np.ndarray  # (window_len, 3)


@dataclass(frozen=True, eq=False)
class FeatureInstance:
    subject_id: int
    label: Activity
    x: np.ndarray


def windowize(segment, spec: WindowSpec):
    """Split a segment into ``len // window_len`` windows, dropping the remainder."""
    n = len(segment) // spec.window_len
    return [
        RawWindow(segment.subject_id, segment.activity, segment.accel[k * spec.window_len:(k + 1) * spec.window_len])
        for k in range(n)
    ]


def _lag1_autocorr(v):
    a, b = v[:-1], v[1:]
    if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    scale = np.ptp(v)
    da = (a - a.mean()) / scale
    db = (b - b.mean()) / scale
    denom = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if not denom > 0:  # deviations underflowed
        return 0.0
    return float(np.clip(np.dot(da, db) / denom, -1.0, 1.0))


def axis_features(v):
    """The six statistics of one axis, in ``STATISTICS`` order."""
    v = np.asarray(v, dtype=np.float64)
    rng = float(np.ptp(v))
    rms = float(np.sqrt(np.mean(v * v)))
    if rng == 0:
        return [float(v[0]), 0.0, 0.0, 0.0, 0.0, rms]
    mean = float(v.mean())
    d = (v - mean) / rng  # unit range keeps tiny or huge windows clear of under/overflow
    m2 = float(np.mean(d * d))
    m3 = float(np.mean(d * d * d))
    denom = m2**1.5
    skew = m3 / denom if denom > 0 else 0.0
    return [mean, float(np.sqrt(m2) * rng), float(skew), _lag1_autocorr(v), rng, rms]


def window_features(samples):
    """Feature vector of a (window_len, 3) sample block."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 3 or samples.shape[0] == 0:
        raise ValueError(f"window must have shape (n, 3), got {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("window contains non-finite samples")
    out = []
    for k in range(3):
        out.extend(axis_features(samples[:, k]))
    return np.array(out)


def extract_features(window: RawWindow) -> FeatureInstance:
    return FeatureInstance(window.subject_id, Activity.parse(window.activity), window_features(window.samples))


class FeatureSet:
    """Column-oriented collection of feature instances.

    ``ids`` are stable instance identifiers, preserved by ``subset`` so that
    train/test partitions can be audited for leakage.
    """

    def __init__(self, X, labels, subjects, ids=None):
        X = np.asarray(X, dtype=np.float64).reshape(-1, N_FEATURES)
        labels = np.array([Activity.parse(v).value for v in labels], dtype=object)
        subjects = np.asarray(subjects, dtype=np.int64)
        if not (len(X) == len(labels) == len(subjects)):
            raise ValueError("X, labels and subjects must have equal length")
        if not np.all(np.isfinite(X)):
            raise ValueError("feature matrix contains non-finite values")
        self.X = X
        self.labels = labels
        self.subjects = subjects
        self.ids = np.arange(len(X)) if ids is None else np.asarray(ids, dtype=np.int64)

    @classmethod
    def from_instances(cls, instances):
        instances = list(instances)
        if not instances:
            return cls(np.empty((0, N_FEATURES)), [], [])
        return cls(
            np.stack([inst.x for inst in instances]),
            [inst.label for inst in instances],
            [inst.subject_id for inst in instances],
        )

    def __len__(self):
        return len(self.X)

    def __iter__(self):
        for x, label, subject in zip(self.X, self.labels, self.subjects):
            yield FeatureInstance(int(subject), Activity(label), x)

    def subset(self, mask_or_index):
        idx = np.asarray(mask_or_index)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return FeatureSet(self.X[idx], self.labels[idx], self.subjects[idx], self.ids[idx])

    def concat(self, other):
        return FeatureSet(
            np.vstack([self.X, other.X]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.subjects, other.subjects]),
            np.concatenate([self.ids, other.ids]),
        )

    def subject_ids(self):
        return sorted(int(s) for s in np.unique(self.subjects))

    def class_names(self):
        return tuple(sorted({str(v) for v in self.labels}))

    def label_indices(self, class_names):
        lookup = {name: k for k, name in enumerate(class_names)}
        try:
            return np.array([lookup[v] for v in self.labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} is not one of the model classes {tuple(class_names)}") from None

    def counts(self):
        """Instance counts keyed by subject, then class name."""
        out = {}
        for s, label in zip(self.subjects.tolist(), self.labels.tolist()):
            per = out.setdefault(s, {})
            per[label] = per.get(label, 0) + 1
        return {s: dict(sorted(v.items())) for s, v in sorted(out.items())}


def build_feature_set(segments, spec: WindowSpec | None = None):
    """Windowize every segment and compute features, preserving input order."""
    rows, labels, subjects = [], [], []
    for seg in segments:
        wspec = spec or WindowSpec.for_rate(seg.sample_rate_hz)
        for win in windowize(seg, wspec):
            rows.append(window_features(win.samples))
            labels.append(win.activity)
            subjects.append(win.subject_id)
    if not rows:
        return FeatureSet(np.empty((0, N_FEATURES)), [], [])
    return FeatureSet(np.stack(rows), labels, subjects)


def write_feature_csv(features: FeatureSet, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("subject", "label") + FEATURE_NAMES)
        for x, label, subject in zip(features.X, features.labels, features.subjects):
            writer.writerow([int(subject), label] + [repr(float(v)) for v in x])


def read_feature_csv(path):
    from .errors import DataError

    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open feature file {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ("subject", "label") + FEATURE_NAMES:
            raise DataError(f"{path}: unexpected feature CSV header")
        rows, labels, subjects = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != 2 + N_FEATURES:
                raise DataError(f"{path}:{lineno}: expected {2 + N_FEATURES} fields, found {len(rec)}")
            try:
                subjects.append(int(rec[0]))
                labels.append(Activity.parse(rec[1]))
                rows.append([float(v) for v in rec[2:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        return FeatureSet(np.empty((0, N_FEATURES)), [], [])
    return FeatureSet(np.array(rows), labels, subjects)
