"""Deterministic synthetic accelerometer recordings for tests and demos."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import Activity, RecordingSegment


@dataclass(frozen=True)
class ClassSignal:
    """Per-axis sinusoid ``offset + amplitude * sin(2 pi freq t + phase) + noise``."""

    activity: Activity
    freq_hz: float
    amplitude: tuple[float, float, float]
    offset: tuple[float, float, float] = (0.0, 0.0, 9.81)
    noise: float = 0.1


# Walk and Run share offsets and differ in amplitude by roughly 1.5x, so a
# subject with 1.5x larger movements is easily confused by a model that relies
# on amplitude features alone.
DEFAULT_CLASSES = (
    ClassSignal(Activity.BIKE, 1.2, (1.5, 1.0, 2.0), (1.0, 3.0, 8.5), 0.3),
    ClassSignal(Activity.REST, 0.2, (0.05, 0.05, 0.05), (0.0, 0.5, 9.7), 0.05),
    ClassSignal(Activity.RUN, 2.4, (4.0, 3.0, 5.0), (0.5, 1.5, 9.0), 0.4),
    ClassSignal(Activity.WALK, 1.8, (2.6, 1.9, 3.2), (0.5, 1.5, 9.3), 0.4),
)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic multi-subject dataset.

    ``subject_scale`` multiplies the oscillation amplitude of individual
    subjects (the drift knob); ``amp_jitter`` is the standard deviation of a
    per-subject, per-class log-normal amplitude factor that makes subjects
    differ from each other. ``segment_amp_jitter`` and ``freq_jitter`` add
    the same kind of log-normal variation per segment.
    """

    classes: tuple[ClassSignal, ...] = DEFAULT_CLASSES
    subjects: tuple[int, ...] = (1, 2, 3, 4)
    segments_per_class: int = 4
    samples_per_segment: int = 125
    sample_rate_hz: int = 25
    amp_jitter: float = 0.1
    segment_amp_jitter: float = 0.15
    freq_jitter: float = 0.05
    subject_scale: dict[int, float] = field(default_factory=dict)


def synth_generate(spec: SynthSpec, seed: int):
    """Generate segments ordered by subject, class, then segment number."""
    if spec.segments_per_class <= 0 or spec.samples_per_segment <= 0:
        raise ValueError("segment counts must be positive")
    if spec.sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if not spec.subjects or not spec.classes:
        raise ValueError("spec needs at least one subject and one class")
    if len({c.activity for c in spec.classes}) != len(spec.classes):
        raise ValueError("duplicate activity in spec.classes")

    rng = np.random.default_rng(seed)
    t = np.arange(spec.samples_per_segment) / spec.sample_rate_hz
    segments = []
    for subject in spec.subjects:
        scale = spec.subject_scale.get(subject, 1.0)
        for cls in spec.classes:
            amp = np.asarray(cls.amplitude, dtype=np.float64) * scale
            amp = amp * np.exp(rng.normal(0.0, spec.amp_jitter, size=3)) if spec.amp_jitter > 0 else amp
            offset = np.asarray(cls.offset, dtype=np.float64)
            for k in range(spec.segments_per_class):
                phase = rng.uniform(0.0, 2 * np.pi, size=3)
                freq = cls.freq_hz * np.exp(rng.normal(0.0, spec.freq_jitter)) if spec.freq_jitter > 0 else cls.freq_hz
                seg_amp = amp * np.exp(rng.normal(0.0, spec.segment_amp_jitter, size=3)) if spec.segment_amp_jitter > 0 else amp
                wave = np.sin(2 * np.pi * freq * t[:, None] + phase[None, :])
                accel = offset + seg_amp * wave + rng.normal(0.0, cls.noise, size=(t.size, 3))
                segments.append(
                    RecordingSegment(
                        subject_id=subject,
                        activity=cls.activity,
                        raw_code=f"synth-{cls.activity.value.lower()}",
                        t_index=np.arange(t.size),
                        accel=accel,
                        sample_rate_hz=spec.sample_rate_hz,
                        source=f"synth:s{subject}:{cls.activity.value}:{k}",
                    )
                )
    return segments
