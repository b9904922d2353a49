from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np


class Activity(str, enum.Enum):
    """Activity classes used for classification.

    Members sort alphabetically, which fixes the class index order used by
    models and reports (Bike, Rest, Run, Walk).
    """

    BIKE = "Bike"
    REST = "Rest"
    RUN = "Run"
    WALK = "Walk"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        for member in cls:
            if member.value.lower() == str(name).strip().lower():
                return member
        raise ValueError(f"unknown activity {name!r}; expected one of {[m.value for m in cls]}")

    def __str__(self):
        return self.value


class SampleFrame(NamedTuple):
    subject_id: int
    activity: Activity
    raw_code: str
    t_index: int
    ax: float
    ay: float
    az: float


@dataclass(frozen=True, eq=False)
class RecordingSegment:
    """A contiguous block of triaxial accelerometer samples.

    ``accel`` has shape (n, 3); ``t_index`` holds the source row index of each
    sample and is strictly increasing.
    """

    subject_id: int
    activity: Activity
    raw_code: str
    t_index: np.ndarray
    accel: np.ndarray
    sample_rate_hz: int
    source: str = ""

    def __post_init__(self):
        t = np.asarray(self.t_index, dtype=np.int64)
        a = np.asarray(self.accel, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != 3:
            raise ValueError(f"accel must have shape (n, 3), got {a.shape}")
        if t.shape != (a.shape[0],):
            raise ValueError("t_index and accel lengths differ")
        if not np.all(np.isfinite(a)):
            raise ValueError("segment contains non-finite samples")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("t_index must be strictly increasing")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        t.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "t_index", t)
        object.__setattr__(self, "accel", a)
        object.__setattr__(self, "activity", Activity.parse(self.activity))

    def __len__(self):
        return self.accel.shape[0]

    def frames(self) -> Iterator[SampleFrame]:
        for t, (ax, ay, az) in zip(self.t_index.tolist(), self.accel.tolist()):
            yield SampleFrame(self.subject_id, self.activity, self.raw_code, t, ax, ay, az)

    def same_data(self, other):
        return (
            self.subject_id == other.subject_id
            and self.activity == other.activity
            and self.raw_code == other.raw_code
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.t_index, other.t_index)
            and np.array_equal(self.accel, other.accel)
        )


NAN_POLICIES = ("interpolate", "drop")


@dataclass
class IngestConfig:
    """Where and how to read a dataset.

    ``activity_map`` maps class names to dataset-native activity codes
    (``"a15"`` style directory names for DSADS, integer ids for PAMAP2).
    ``None`` fields fall back to the dataset defaults in ``layouts``.
    An empty ``subjects`` tuple means every subject found on disk.
    """

    dataset: str = "synth"
    root: str | None = None
    sensor: str | None = None
    activity_map: dict[str, str] | None = None
    subjects: tuple[int, ...] = ()
    nan_policy: str = "interpolate"
    max_gap: int = 3
    synth: "SynthSpec | None" = field(default=None, repr=False)

    def validate(self):
        from ..errors import ConfigError

        if self.dataset not in ("dsads", "pamap2", "synth"):
            raise ConfigError(f"dataset must be dsads, pamap2 or synth, got {self.dataset!r}")
        if self.nan_policy not in NAN_POLICIES:
            raise ConfigError(f"nan_policy must be one of {NAN_POLICIES}, got {self.nan_policy!r}")
        if self.max_gap < 0:
            raise ConfigError("max_gap must be >= 0")
        if self.activity_map is not None:
            for name in self.activity_map:
                try:
                    Activity.parse(name)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        return self
