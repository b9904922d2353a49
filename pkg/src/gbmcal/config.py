"""Run configuration: an INI-style key-value file plus command-line overrides.

Example (every key optional; defaults shown)::

    [run]
    dataset = synth            ; dsads | pamap2 | synth
    seed = 0
    output_dir = gbmcal-out
    features_path =            ; reuse a features.csv instead of ingesting

    [ingest]
    root =                     ; overridden by $GBMCAL_DATA_ROOT
    sensor =                   ; DSADS unit (T RA LA RL LL) or PAMAP2 IMU
    activity_map =             ; e.g. Bike:a15, Rest:a01, Run:a12, Walk:a09
    subjects =                 ; e.g. 101, 102, 105
    nan_policy = interpolate   ; interpolate | drop
    max_gap = 3

    [window]
    seconds = 1.0

    [train]
    n_rounds = 100
    max_depth = 3
    min_samples_leaf = 5
    shrinkage = 0.1
    subsample = 1.0

    [calibrate]
    learning_rate = 1.0
    batch_size = 32
    max_epochs = 200
    validation_fraction = 0.2
    patience = 20
    gradient_mode = full_jacobian

    [evaluate]
    repetitions = 5
    roc_csv = true

    [synth]
    subjects = 1, 2, 3, 4, 5, 6
    segments_per_class = 10
    samples_per_segment = 125
    sample_rate_hz = 25
    amp_jitter = 0.1
    segment_amp_jitter = 0.15
    freq_jitter = 0.05
    subject_scale =            ; e.g. 6:1.5

The training and calibration seeds derive from ``run.seed``.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

from .calibrate import CalibrationConfig
from .errors import ConfigError
from .gbm import TrainConfig
from .ingest import IngestConfig, SynthSpec

DATA_ROOT_ENV = "GBMCAL_DATA_ROOT"

SECTIONS = ("run", "ingest", "window", "train", "calibrate", "evaluate", "synth")


@dataclass
class RunConfig:
    dataset: str = "synth"
    seed: int = 0
    output_dir: str = "gbmcal-out"
    features_path: str | None = None
    ingest: IngestConfig = field(default_factory=IngestConfig)
    window_seconds: float = 1.0
    train: TrainConfig = field(default_factory=TrainConfig)
    calibrate: CalibrationConfig = field(default_factory=CalibrationConfig)
    repetitions: int = 5
    roc_csv: bool = True
    synth: SynthSpec = field(default_factory=lambda: SynthSpec(subjects=(1, 2, 3, 4, 5, 6), segments_per_class=10))

    def validate(self):
        self.ingest.dataset = self.dataset
        self.ingest.synth = self.synth
        self.ingest.validate()
        self.train.validate()
        self.calibrate.validate()
        if self.window_seconds <= 0:
            raise ConfigError("window.seconds must be positive")
        if self.repetitions < 1:
            raise ConfigError("evaluate.repetitions must be >= 1")
        if self.dataset in ("dsads", "pamap2") and not self.ingest.root and not self.features_path:
            raise ConfigError(f"dataset {self.dataset!r} needs ingest.root (or ${DATA_ROOT_ENV})")
        return self

    def to_dict(self):
        ingest = dataclasses.asdict(dataclasses.replace(self.ingest, synth=None))
        ingest.pop("synth")
        synth = dataclasses.asdict(self.synth)
        synth["subject_scale"] = {str(k): v for k, v in sorted(self.synth.subject_scale.items())}
        for c in synth["classes"]:
            c["activity"] = str(c["activity"])
        return {
            "run": {"dataset": self.dataset, "seed": self.seed, "output_dir": self.output_dir,
                    "features_path": self.features_path},
            "ingest": ingest,
            "window": {"seconds": self.window_seconds},
            "train": dataclasses.asdict(self.train),
            "calibrate": dataclasses.asdict(self.calibrate),
            "evaluate": {"repetitions": self.repetitions, "roc_csv": self.roc_csv},
            "synth": synth,
        }

    def hash(self):
        """Hash of the resolved settings that affect results (output paths excluded)."""
        d = self.to_dict()
        d["run"] = {k: v for k, v in d["run"].items() if k != "output_dir"}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _int_list(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


def _pairs(text):
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ValueError(f"expected key:value, got {item!r}")
        k, v = item.split(":", 1)
        out[k.strip()] = v.strip()
    return out


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt_str(text):
    return text.strip() or None


_SCALARS = {
    ("run", "dataset"): ("dataset", str),
    ("run", "seed"): ("seed", int),
    ("run", "output_dir"): ("output_dir", str),
    ("run", "features_path"): ("features_path", _opt_str),
    ("window", "seconds"): ("window_seconds", float),
    ("evaluate", "repetitions"): ("repetitions", int),
    ("evaluate", "roc_csv"): ("roc_csv", _bool),
}

_INGEST = {
    "root": _opt_str,
    "sensor": _opt_str,
    "activity_map": lambda t: _pairs(t) or None,
    "subjects": _int_list,
    "nan_policy": str.strip,
    "max_gap": int,
}

_SYNTH = {
    "subjects": _int_list,
    "segments_per_class": int,
    "samples_per_segment": int,
    "sample_rate_hz": int,
    "amp_jitter": float,
    "segment_amp_jitter": float,
    "freq_jitter": float,
    "subject_scale": lambda t: {int(k): float(v) for k, v in _pairs(t).items()},
}


def _coerce_field(obj, name, text):
    types = {f.name: f.type for f in dataclasses.fields(obj)}
    if name not in types or name == "seed":
        raise KeyError(name)
    kind = types[name]
    if kind in (int, "int"):
        return int(text)
    if kind in (float, "float"):
        return float(text)
    return text.strip()


def apply_setting(cfg: RunConfig, section, key, text):
    section, key = section.strip().lower(), key.strip().lower()
    try:
        if (section, key) in _SCALARS:
            attr, conv = _SCALARS[(section, key)]
            setattr(cfg, attr, conv(text))
        elif section == "ingest" and key in _INGEST:
            setattr(cfg.ingest, key, _INGEST[key](text))
        elif section == "synth" and key in _SYNTH:
            cfg.synth = dataclasses.replace(cfg.synth, **{key: _SYNTH[key](text)})
        elif section in ("train", "calibrate"):
            obj = getattr(cfg, section)
            setattr(obj, key, _coerce_field(obj, key, text))
        else:
            raise KeyError(key)
    except KeyError:
        raise ConfigError(f"unknown setting {section}.{key}") from None
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {exc}") from None


def load_config(path=None, overrides=(), env=None) -> RunConfig:
    """Build a validated RunConfig.

    Precedence, lowest first: defaults, the config file, ``$GBMCAL_DATA_ROOT``,
    then ``overrides`` given as ``("section.key", "value")`` pairs.
    """
    env = os.environ if env is None else env
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from None
        for section in parser.sections():
            if section.lower() not in SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                apply_setting(cfg, section, key, value)
    if env.get(DATA_ROOT_ENV):
        cfg.ingest.root = env[DATA_ROOT_ENV]
    for dotted, value in overrides:
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        section, key = dotted.split(".", 1)
        apply_setting(cfg, section, key, value)
    cfg.train.seed = cfg.seed
    cfg.calibrate.seed = cfg.seed
    return cfg.validate()
