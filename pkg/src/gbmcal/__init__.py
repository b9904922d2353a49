"""Gradient-boosted tree ensembles with per-user weight calibration.

A multiclass GBM is trained on pooled accelerometer data from many subjects.
For a new subject, only the per-estimator, per-class combination weights are
re-fit with mini-batch SGD on a softmax mean-squared-error loss; the trees
themselves are never modified.
"""

from .errors import (
    CalibrationError,
    ConfigError,
    DataError,
    FoldError,
    GbmcalError,
    IngestError,
    ModelLoadError,
    TrainingError,
)
from .ingest import (
    Activity,
    ClassSignal,
    IngestConfig,
    RecordingSegment,
    SampleFrame,
    SynthSpec,
    parse_dsads,
    parse_pamap2,
    synth_generate,
)
from .features import FEATURE_NAMES, FeatureInstance, FeatureSet, WindowSpec, build_feature_set
from .gbm import GbmModel, RegressionTree, TrainConfig, deserialize, serialize, train
from .calibrate import CalibrationConfig, CalibrationResult, tune
from .evaluate import CvReport, run_baseline_cv, run_cv, run_tuned_cv

__version__ = "0.1.0"

__all__ = [
    "Activity",
    "CalibrationConfig",
    "CalibrationError",
    "CalibrationResult",
    "ClassSignal",
    "ConfigError",
    "CvReport",
    "DataError",
    "FEATURE_NAMES",
    "FeatureInstance",
    "FeatureSet",
    "FoldError",
    "GbmModel",
    "GbmcalError",
    "IngestConfig",
    "IngestError",
    "ModelLoadError",
    "RecordingSegment",
    "RegressionTree",
    "SampleFrame",
    "SynthSpec",
    "TrainConfig",
    "TrainingError",
    "WindowSpec",
    "build_feature_set",
    "deserialize",
    "parse_dsads",
    "parse_pamap2",
    "run_baseline_cv",
    "run_cv",
    "run_tuned_cv",
    "serialize",
    "synth_generate",
    "train",
    "tune",
]
