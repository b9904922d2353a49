"""Dataset readers producing uniform streams of labeled accelerometer samples."""

from .layouts import DSADS_DEFAULT_ACTIVITY_MAP, PAMAP2_DEFAULT_ACTIVITY_MAP
from .parsers import parse_dsads, parse_pamap2
from .synth import DEFAULT_CLASSES, ClassSignal, SynthSpec, synth_generate
from .types import NAN_POLICIES, Activity, IngestConfig, RecordingSegment, SampleFrame


def load_segments(config: IngestConfig, seed: int = 0):
    """Dispatch on ``config.dataset``."""
    config.validate()
    if config.dataset == "dsads":
        return parse_dsads(config.root, config)
    if config.dataset == "pamap2":
        return parse_pamap2(config.root, config)
    return synth_generate(config.synth or SynthSpec(), seed)


__all__ = [
    "Activity",
    "ClassSignal",
    "DEFAULT_CLASSES",
    "DSADS_DEFAULT_ACTIVITY_MAP",
    "IngestConfig",
    "NAN_POLICIES",
    "PAMAP2_DEFAULT_ACTIVITY_MAP",
    "RecordingSegment",
    "SampleFrame",
    "SynthSpec",
    "load_segments",
    "parse_dsads",
    "parse_pamap2",
    "synth_generate",
]
